// Thin typed client over the service endpoints. The fetch implementation
// is injectable so tests can run against a fake server.

import type {
  DecisionDoc,
  DeviceDoc,
  DevicePolicyDoc,
  NotificationDoc,
  ParseResponse,
  PoliciesResponse,
  SessionDoc,
  SubmitResponse,
  UsersResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: Record<string, unknown>,
  ) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
  }

  get threatTag(): string | null {
    const tag = this.body.threat_tag ?? this.body.tag;
    return typeof tag === "string" ? tag : null;
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    const text = await response.text();
    const doc = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, doc);
    }
    return doc as T;
  }

  // users
  listUsers(): Promise<UsersResponse> {
    return this.request("GET", "/users");
  }

  bootstrapOwner(user: string, role = "owner") {
    return this.request("POST", "/users", { user, role });
  }

  addUser(record: {
    commander: string;
    user: string;
    priority: number;
    device_perm?: boolean;
    validity?: number;
    role?: string;
  }) {
    return this.request("POST", "/users", record);
  }

  resolvePending(user: string, cls: number, by: string) {
    return this.request("POST", `/users/${user}/resolve`, { class: cls, by });
  }

  removeUser(user: string, by: string) {
    return this.request("DELETE", `/users/${user}?by=${encodeURIComponent(by)}`);
  }

  // policies
  submitPolicyText(text: string): Promise<SubmitResponse> {
    return this.request("POST", "/policies", { text });
  }

  submitDevicePolicy(policy: DevicePolicyDoc): Promise<SubmitResponse> {
    return this.request("POST", "/policies", { device_policy: policy });
  }

  dryRunParse(text: string): Promise<ParseResponse> {
    return this.request("POST", "/policies?dry_run=1", { text });
  }

  listPolicies(): Promise<PoliciesResponse> {
    return this.request("GET", "/policies");
  }

  // negotiation
  listSessions(state?: string): Promise<{ sessions: SessionDoc[] }> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request("GET", `/negotiations${query}`);
  }

  respond(sessionId: number, party: string, verdict: "accept" | "reject") {
    return this.request<{ session: SessionDoc }>(
      "POST", `/negotiations/${sessionId}/respond`, { party, verdict });
  }

  // commands / presence / feed
  command(doc: Record<string, unknown>): Promise<DecisionDoc> {
    return this.request("POST", "/commands", doc);
  }

  setPresence(user: string, state: "Home" | "Away") {
    return this.request("PUT", `/presence/${user}`, { state });
  }

  notifications(since: number): Promise<{ notifications: NotificationDoc[]; cursor: number }> {
    return this.request("GET", `/notifications?since=${since}`);
  }

  listDevices(): Promise<{ devices: DeviceDoc[] }> {
    return this.request("GET", "/devices");
  }

  clock(): Promise<{ clock: number }> {
    return this.request("GET", "/clock");
  }
}
