// The two-browser-session story against a scripted fake server whose
// responses mirror the live service (the same flow runs headlessly
// against the real API in the backend test suite).

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { renderInbox, renderPolicyList } from "../src/render.js";
import type { ClauseDoc, SessionDoc } from "../src/types.js";

type Handler = { status?: number; body: unknown };

class FakeServer {
  users: Record<string, { cls: number; device_perm: boolean }> = {};
  clauses: ClauseDoc[] = [];
  sessions: SessionDoc[] = [];
  notifications: { seq: number; recipient: string; message: string; tag: string | null; at: number }[] = [];
  private nextClause = 1;

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    const { status = 200, body: payload } = this.route(method, url, body);
    return new Response(JSON.stringify(payload), { status });
  };

  private notify(recipient: string, message: string, tag: string | null = null) {
    this.notifications.push({
      seq: this.notifications.length + 1, recipient, message, tag, at: 0,
    });
  }

  private route(method: string, url: string, body: any): Handler {
    const [path] = url.split("?");
    if (method === "POST" && path === "/users") {
      const cls = body.commander === undefined ? 0 : body.priority;
      this.users[body.user] = { cls, device_perm: cls === 0 };
      return { status: 201, body: { user: body.user, entry: this.users[body.user] } };
    }
    if (method === "GET" && path === "/users") {
      return { body: { users: this.users, pending: {} } };
    }
    if (method === "POST" && path === "/policies") {
      return { body: this.submitPolicy(body.text) };
    }
    if (method === "GET" && path === "/policies") {
      return { body: { clauses: this.clauses, enforced: [], rules: { rules: [] } } };
    }
    if (method === "GET" && path === "/negotiations") {
      return { body: { sessions: this.sessions } };
    }
    const respond = path.match(/^\/negotiations\/(\d+)\/respond$/);
    if (method === "POST" && respond) {
      return this.respond(Number(respond[1]), body.party, body.verdict);
    }
    if (method === "GET" && path === "/notifications") {
      const since = Number(new URL(url, "http://x").searchParams.get("since") ?? 0);
      const fresh = this.notifications.filter((n) => n.seq > since);
      return { body: { notifications: fresh, cursor: fresh.at(-1)?.seq ?? since } };
    }
    return { status: 404, body: { error: `no route ${method} ${path}` } };
  }

  private submitPolicy(text: string) {
    const owner = /@(\w+)/.exec(text)![1];
    const [, lo, hi] = /\[(\d+)-(\d+)\]/.exec(text)!;
    const clause: ClauseDoc = {
      id: this.nextClause++, owners: [owner], subject: "*", device: "thermostat_1",
      conditions: [{ attribute: "temperature", op: "in", low: +lo, high: +hi }],
      action: "demand", status: "enforced",
    };
    this.clauses.push(clause);
    const others = this.clauses.filter(
      (c) => c.id !== clause.id && c.status === "enforced");
    if (others.length === 0) {
      return { clauses: [clause], diagnostics: [], conflicts: [], sessions: [] };
    }
    const rival = others[0];
    rival.status = "pending";
    clause.status = "pending";
    const a = rival.conditions[0];
    const b = clause.conditions[0];
    const averaged = {
      attribute: "temperature", op: "in",
      low: Math.floor((a.low! + b.low!) / 2), high: Math.floor((a.high! + b.high!) / 2),
    };
    const session: SessionDoc = {
      id: this.sessions.length + 1,
      kind: "HCC",
      report: { clause_i: rival.id, clause_j: clause.id, class: "HCC", attributes: [] },
      proposal: [averaged],
      proposed_clause: {
        id: this.nextClause++, owners: [...rival.owners, ...clause.owners],
        subject: "*", device: "thermostat_1", conditions: [averaged], action: "demand",
      },
      parties: [...rival.owners, ...clause.owners].sort(),
      responses: Object.fromEntries(
        [...rival.owners, ...clause.owners].map((p) => [p, "pending"])),
      state: "open",
      created_at: 0,
    };
    this.sessions.push(session);
    return {
      clauses: [clause], diagnostics: [],
      conflicts: [session.report], sessions: [session.id],
    };
  }

  private respond(id: number, party: string, verdict: string): Handler {
    const session = this.sessions.find((s) => s.id === id);
    if (!session) return { status: 404, body: { error: "unknown session" } };
    if (!session.parties.includes(party)) {
      return { status: 403, body: { error: "not a party" } };
    }
    if (session.state !== "open" || session.responses[party] !== "pending") {
      return { status: 409, body: { error: "already settled" } };
    }
    session.responses[party] = verdict;
    if (verdict === "reject") {
      session.state = "escalated";
      this.notify("owner", "negotiation failed: decide the policy");
    } else if (Object.values(session.responses).every((v) => v === "accept")) {
      session.state = "agreed";
      const installed = { ...session.proposed_clause, status: "enforced" };
      this.clauses.push(installed);
    }
    return { body: { session } };
  }
}

function household(server: FakeServer) {
  const owner = new ApiClient("", server.fetch);
  return owner.bootstrapOwner("owner")
    .then(() => owner.addUser({ commander: "owner", user: "alice", priority: 2 }))
    .then(() => owner.addUser({ commander: "owner", user: "bob", priority: 2 }));
}

const ALICE_RANGE = "@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;";
const BOB_RANGE = "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;";

describe("two sessions negotiating the averaged offer", () => {
  it("both accept: the 67-75 rule lands in the policy list", async () => {
    const server = new FakeServer();
    await household(server);
    const alice = new ApiClient("", server.fetch);
    const bob = new ApiClient("", server.fetch);

    await alice.submitPolicyText(ALICE_RANGE);
    const submitted = await bob.submitPolicyText(BOB_RANGE);
    expect(submitted.conflicts.map((c) => c.class)).toEqual(["HCC"]);

    // both browser sessions see the same 67-75 offer
    for (const client of [alice, bob]) {
      const { sessions } = await client.listSessions();
      expect(sessions).toHaveLength(1);
      const offer = sessions[0].proposal[0];
      expect([offer.low, offer.high]).toEqual([67, 75]);
    }

    const { sessions } = await alice.listSessions();
    await alice.respond(sessions[0].id, "alice", "accept");
    await bob.respond(sessions[0].id, "bob", "accept");

    const after = await bob.listSessions();
    expect(after.sessions[0].state).toBe("agreed");
    const policies = await bob.listPolicies();
    const enforced = policies.clauses.filter((c) => c.status === "enforced");
    expect(enforced).toHaveLength(1);
    const cond = enforced[0].conditions[0];
    expect([cond.low, cond.high]).toEqual([67, 75]);

    const html = renderPolicyList(policies.clauses);
    expect(html).toContain("temperature in [67-75]");
  });

  it("one reject: the inbox shows the escalation banner", async () => {
    const server = new FakeServer();
    await household(server);
    const alice = new ApiClient("", server.fetch);
    const bob = new ApiClient("", server.fetch);

    await alice.submitPolicyText(ALICE_RANGE);
    await bob.submitPolicyText(BOB_RANGE);
    const { sessions } = await alice.listSessions();
    await alice.respond(sessions[0].id, "alice", "accept");
    await bob.respond(sessions[0].id, "bob", "reject");

    const after = await alice.listSessions();
    expect(after.sessions[0].state).toBe("escalated");
    const policies = await alice.listPolicies();
    const clausesById = new Map(policies.clauses.map((c) => [c.id, c]));
    const html = renderInbox(after.sessions, clausesById, "alice", ["owner"]);
    expect(html).toContain("data-escalated");
    expect(html).toContain("escalated to owner");

    const feed = await alice.notifications(0);
    expect(feed.notifications.some((n) => n.recipient === "owner")).toBe(true);
  });

  it("a stale double-response comes back as 409, not a double count", async () => {
    const server = new FakeServer();
    await household(server);
    const alice = new ApiClient("", server.fetch);
    await alice.submitPolicyText(ALICE_RANGE);
    await alice.submitPolicyText(BOB_RANGE);
    const { sessions } = await alice.listSessions();
    await alice.respond(sessions[0].id, "alice", "accept");
    const err = await alice
      .respond(sessions[0].id, "alice", "accept")
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
  });
});
