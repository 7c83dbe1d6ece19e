// Pure renderers: documents in, HTML strings out. No DOM access here so
// every view is testable in plain Node.

import type {
  ClauseDoc,
  ConditionDoc,
  DeviceDoc,
  DiagnosticDoc,
  NotificationDoc,
  PendingResolution,
  SessionDoc,
  UserEntry,
} from "./types.js";

const ROLE_BY_CLASS: Record<number, string> = {
  0: "owner", 1: "adult", 2: "guest", 3: "child",
};

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function minutesToClock(total: number): string {
  const h24 = Math.floor((total % 1440) / 60);
  const minute = total % 60;
  const half = h24 < 12 ? "am" : "pm";
  const hour = h24 % 12 || 12;
  return `${hour}:${String(minute).padStart(2, "0")}${half}`;
}

export function formatCondition(cond: ConditionDoc): string {
  switch (cond.op) {
    case "in":
      return `${cond.attribute} in [${cond.low}-${cond.high}]`;
    case "notin":
      return `${cond.attribute} notin [${cond.low}-${cond.high}]`;
    case "window":
      return `time in [${minutesToClock(cond.low!)}-${minutesToClock(cond.high!)}]`;
    case "window_not":
      return `time notin [${minutesToClock(cond.low!)}-${minutesToClock(cond.high!)}]`;
    case "member": {
      const whose = cond.user ? `${cond.attribute}(${cond.user})` : cond.attribute;
      return `${whose} in [${(cond.members ?? []).join(", ")}]`;
    }
    default: {
      const spans = cond.region?.spans
        ? cond.region.spans.map(([lo, hi]) => `${lo}-${hi}`).join(" or ")
        : (cond.region?.members ?? []).join(", ");
      return `${cond.attribute} in [${spans}]`;
    }
  }
}

export function formatClause(clause: ClauseDoc): string {
  const subject = clause.subject === "*" ? "everyone" : clause.subject;
  const conditions = clause.conditions.length
    ? clause.conditions.map(formatCondition).join(", ")
    : "unconditional";
  return `${clause.action} for ${subject} on ${clause.device}: ${conditions}`;
}

export function roleLabel(entry: UserEntry): string {
  return entry.role ?? ROLE_BY_CLASS[entry.cls] ?? `class ${entry.cls}`;
}

export function validityCountdown(entry: UserEntry, clock: number): string {
  if (entry.expiry == null) {
    return "";
  }
  const left = entry.expiry - clock;
  if (left <= 0) {
    return "expired";
  }
  const days = Math.floor(left / 86400);
  const hours = Math.floor((left % 86400) / 3600);
  return days > 0 ? `expires in ${days}d ${hours}h` : `expires in ${hours}h`;
}

// -- user management ---------------------------------------------------------

export function renderUserTable(
  users: Record<string, UserEntry>,
  clock: number,
): string {
  const rows = Object.entries(users)
    .sort(([, a], [, b]) => a.cls - b.cls)
    .map(([name, entry]) => {
      const countdown = validityCountdown(entry, clock);
      return `<tr>
        <td>${escapeHtml(name)}</td>
        <td>${entry.cls}</td>
        <td>${escapeHtml(roleLabel(entry))}</td>
        <td>${entry.device_perm ? "yes" : "no"}</td>
        <td class="countdown">${countdown}</td>
      </tr>`;
    });
  if (rows.length === 0) {
    return `<p class="empty" data-empty="users">No users yet: bootstrap the owner below.</p>`;
  }
  return `<table class="users"><thead>
    <tr><th>user</th><th>class</th><th>role</th><th>device perm</th><th></th></tr>
  </thead><tbody>${rows.join("")}</tbody></table>`;
}

export function renderPendingPrompts(pending: Record<string, PendingResolution>): string {
  const cards = Object.values(pending).map((p) => {
    const options = p.proposals
      .map(([by, cls]) =>
        `<button class="resolve" data-user="${escapeHtml(p.user)}" data-class="${cls}">` +
        `class ${cls} (per ${escapeHtml(by)})</button>`)
      .join(" ");
    return `<div class="pending" data-pending="${escapeHtml(p.user)}">
      <strong>${escapeHtml(p.user)}</strong> is blocked: equal-rank commanders
      disagree on a class. Fix it: ${options}
    </div>`;
  });
  return cards.join("");
}

/** Classes the acting user may assign: their own number or higher. */
export function assignableClasses(ownClass: number, maxClass = 4): number[] {
  const out: number[] = [];
  for (let cls = ownClass; cls <= maxClass; cls += 1) {
    out.push(cls);
  }
  return out;
}

export function renderAddUserForm(me: string, myEntry: UserEntry | undefined): string {
  if (!myEntry) {
    return `<form id="bootstrap-form" class="card">
      <h3>Bootstrap the home</h3>
      <input name="user" placeholder="owner id" required />
      <button type="submit">Create owner (class 0)</button>
    </form>`;
  }
  const options = assignableClasses(myEntry.cls)
    .map((cls) => `<option value="${cls}">${cls} (${ROLE_BY_CLASS[cls] ?? "custom"})</option>`)
    .join("");
  const perm = myEntry.device_perm
    ? `<label><input type="checkbox" name="device_perm" /> may add/remove devices</label>`
    : "";
  return `<form id="add-user-form" class="card">
    <h3>Add a user (as ${escapeHtml(me)}, class ${myEntry.cls})</h3>
    <input name="user" placeholder="user id" required />
    <select name="priority">${options}</select>
    <input name="validity" type="number" min="1" placeholder="validity (seconds, optional)" />
    ${perm}
    <button type="submit">Add</button>
    <span class="form-error" data-error></span>
  </form>`;
}

// -- policy management ----------------------------------------------------------

export function renderPolicyList(clauses: ClauseDoc[]): string {
  if (clauses.length === 0) {
    return `<p class="empty" data-empty="policies">No policies submitted yet.</p>`;
  }
  const rows = clauses.map((c) => `<tr class="status-${c.status ?? "unknown"}">
    <td>${c.id}</td>
    <td>${escapeHtml(c.owners.join(", "))}</td>
    <td>${escapeHtml(formatClause(c))}</td>
    <td><span class="badge">${escapeHtml(c.status ?? "")}</span></td>
  </tr>`);
  return `<table class="policies"><thead>
    <tr><th>#</th><th>owners</th><th>clause</th><th>status</th></tr>
  </thead><tbody>${rows.join("")}</tbody></table>`;
}

export function renderDeviceBuilder(devices: DeviceDoc[], users: string[]): string {
  const deviceOptions = devices
    .filter((d) => d.kind !== "sensor")
    .map((d) => {
      const range = d.value_attribute
        ? ` data-attr="${d.value_attribute.name}" data-low="${d.value_attribute.low}"` +
          ` data-high="${d.value_attribute.high}"`
        : "";
      return `<option value="${escapeHtml(d.id)}"${range}>${escapeHtml(d.id)}</option>`;
    })
    .join("");
  const restrictedOptions =
    `<option value="0">General (everyone)</option>` +
    users.map((u) => `<option value="${escapeHtml(u)}">restrict ${escapeHtml(u)}</option>`).join("");
  return `<form id="device-policy-form" class="card">
    <h3>Device policy</h3>
    <select name="device">${deviceOptions}</select>
    <select name="restricted">${restrictedOptions}</select>
    <fieldset><legend>time window (optional)</legend>
      <input name="start" type="time" /> <input name="end" type="time" />
    </fieldset>
    <fieldset><legend>value range (optional)</legend>
      <input name="low" type="number" placeholder="min" />
      <input name="high" type="number" placeholder="max" />
    </fieldset>
    <button type="submit">Submit policy</button>
    <span class="form-error" data-error></span>
  </form>`;
}

export function renderDiagnostics(diagnostics: DiagnosticDoc[]): string {
  if (diagnostics.length === 0) {
    return `<p class="ok" data-diagnostics="clean">No problems.</p>`;
  }
  const items = diagnostics.map((d) =>
    `<li class="diag-${d.severity}">line ${d.line}, column ${d.column}: ` +
    `${escapeHtml(d.message)}</li>`);
  return `<ul class="diagnostics">${items.join("")}</ul>`;
}

// -- negotiation inbox -------------------------------------------------------------

export function renderSessionCard(
  session: SessionDoc,
  clausesById: Map<number, ClauseDoc>,
  me: string,
): string {
  const original = [session.report.clause_i, session.report.clause_j]
    .map((id) => clausesById.get(id))
    .filter((c): c is ClauseDoc => c !== undefined)
    .map((c) => `<li>${escapeHtml(c.owners.join(", "))}: ${escapeHtml(formatClause(c))}</li>`)
    .join("");
  const offered = session.proposal.map(formatCondition).map(escapeHtml).join(", ");
  const responses = session.parties
    .map((p) => `${escapeHtml(p)}: ${escapeHtml(session.responses[p] ?? "pending")}`)
    .join(" · ");
  const mine = session.responses[me];
  const actionable = session.state === "open" && mine === "pending";
  const buttons = actionable
    ? `<button class="respond" data-session="${session.id}" data-verdict="accept">Accept</button>
       <button class="respond" data-session="${session.id}" data-verdict="reject">Reject</button>`
    : "";
  return `<div class="session state-${session.state}" data-session-card="${session.id}">
    <h4>${session.kind} on ${escapeHtml(session.proposed_clause.device)}
        <span class="badge">${session.state}</span></h4>
    <ul class="original">${original}</ul>
    <p class="offer">offered: ${offered || "(no change)"}</p>
    <p class="responses">${responses}</p>
    ${buttons}
  </div>`;
}

export function renderInbox(
  sessions: SessionDoc[],
  clausesById: Map<number, ClauseDoc>,
  me: string,
  admins: string[],
): string {
  if (sessions.length === 0) {
    return `<p class="empty" data-empty="inbox">No negotiations.</p>`;
  }
  const banners = sessions
    .filter((s) => s.state === "escalated")
    .map((s) =>
      `<div class="banner escalated" data-escalated="${s.id}">Negotiation #${s.id} on ` +
      `${escapeHtml(s.proposed_clause.device)} escalated to ` +
      `${escapeHtml(admins.join(", ") || "the admin")}: waiting on their decision.</div>`)
    .join("");
  const cards = sessions
    .map((s) => renderSessionCard(s, clausesById, me))
    .join("");
  return banners + cards;
}

export function renderNotifications(notes: NotificationDoc[]): string {
  if (notes.length === 0) {
    return `<p class="empty" data-empty="notifications">Nothing yet.</p>`;
  }
  const items = notes
    .slice()
    .reverse()
    .map((n) => {
      const tag = n.tag ? `<span class="tag tag-${n.tag}">${n.tag}</span> ` : "";
      return `<li data-seq="${n.seq}">${tag}<b>${escapeHtml(n.recipient)}</b>: ` +
        `${escapeHtml(n.message)}</li>`;
    });
  return `<ul class="notifications">${items.join("")}</ul>`;
}
