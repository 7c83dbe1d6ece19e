// Documents mirrored from the HTTP API. Field names match the wire
// format one to one; nothing here is authoritative client state.

export interface UserEntry {
  cls: number;
  device_perm: boolean;
  expiry?: number;
  added_by?: string;
  role?: string;
}

export interface PendingResolution {
  user: string;
  proposals: [string, number][];
  notify: string[];
}

export interface UsersResponse {
  users: Record<string, UserEntry>;
  pending: Record<string, PendingResolution>;
}

export interface ConditionDoc {
  attribute: string;
  op: string;
  low?: number;
  high?: number;
  members?: string[];
  region?: { spans?: number[][]; members?: string[] };
  user?: string;
}

export interface ClauseDoc {
  id: number;
  owners: string[];
  subject: string;
  device: string;
  conditions: ConditionDoc[];
  action: string;
  status?: string;
  parents?: number[];
}

export interface RuleDoc {
  id: string;
  effect: string;
  subject: string;
  resource: string;
  constraints: ConditionDoc[];
  owners: string[];
  source_clauses: number[];
}

export interface PoliciesResponse {
  clauses: ClauseDoc[];
  enforced: number[];
  rules: { rules: RuleDoc[] };
}

export interface ConflictDoc {
  clause_i: number;
  clause_j: number;
  class: string;
  attributes: { attribute: string; overlap: boolean }[];
}

export interface SessionDoc {
  id: number;
  kind: string;
  report: ConflictDoc;
  proposal: ConditionDoc[];
  proposed_clause: ClauseDoc;
  parties: string[];
  responses: Record<string, string>;
  state: string;
  created_at: number;
}

export interface NotificationDoc {
  seq: number;
  recipient: string;
  message: string;
  tag: string | null;
  at: number;
}

export interface DeviceDoc {
  id: string;
  kind: string;
  is_binary: boolean;
  value_attribute?: { name: string; low: number; high: number; unit: string };
}

export interface DecisionDoc {
  verdict: string;
  matched_rule?: string;
  threat_tag?: string;
  notifications?: [string, string][];
  reason?: string;
}

export interface DiagnosticDoc {
  line: number;
  column: number;
  message: string;
  severity: string;
}

export interface ParseResponse {
  clauses: { owner: string; action: string; targets: string[]; devices: string[] }[];
  diagnostics: DiagnosticDoc[];
}

export interface SubmitResponse {
  clauses: ClauseDoc[];
  diagnostics: DiagnosticDoc[];
  conflicts: ConflictDoc[];
  sessions: number[];
}

export interface DevicePolicyDoc {
  user: string;
  device: string;
  time_window?: [number, number];
  value_range?: [number, number];
  restricted?: string;
}
