import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { ItemFlow } from "../src/state.js";
import { MockServer } from "./mock-server.js";

async function tick(times = 4): Promise<void> {
  for (let i = 0; i < times; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function press(key: string): Promise<void> {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
  return tick();
}

function appRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById("app")!;
}

async function startApp(server: MockServer, retryMs = 5): Promise<App> {
  const app = new App(appRoot(), new ApiClient(server.fetch), retryMs);
  await app.start("ann");
  await tick();
  return app;
}

describe("scripted tagging of one full item", () => {
  it("keys 1, 0+reason, 1, 1, 0+reason store five records and complete the item", async () => {
    const server = MockServer.singleItem();
    await startApp(server);

    await press("1"); // rank 1 -> 1
    await press("0"); // rank 2 -> open reason picker
    expect(document.querySelector(".reason-picker.open")).not.toBeNull();
    await press("2"); // MISSING_LETTER
    await press("1"); // rank 3 -> 1
    await press("1"); // rank 4 -> 1
    await press("0"); // rank 5 -> picker
    await press("4"); // TWO_MINOR
    await tick();

    const exported = server.export();
    expect(exported).toHaveLength(5);
    expect(exported.map((r) => r.tag)).toEqual([1, 0, 1, 1, 0]);
    expect(exported.map((r) => r.reason ?? null)).toEqual([
      null,
      "MISSING_LETTER",
      null,
      null,
      "TWO_MINOR",
    ]);
    expect(exported.map((r) => r.rank)).toEqual([1, 2, 3, 4, 5]);
    expect(exported.every((r) => r.headword === "frage")).toBe(true);

    const counter = document.getElementById("progress-counter");
    expect(counter?.textContent).toBe("1 / 1 items complete");
    const next = document.getElementById("next-item") as HTMLButtonElement;
    expect(next.disabled).toBe(false);
  });

  it("escape cancels the reason picker without a submission", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    await press("0");
    expect(document.querySelector(".reason-picker.open")).not.toBeNull();
    await press("Escape");
    expect(document.querySelector(".reason-picker.open")).toBeNull();
    expect(server.storedRows).toHaveLength(0);
  });

  it("next item stays disabled until every rank is acknowledged", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    await press("1");
    await press("1");
    const next = document.getElementById("next-item") as HTMLButtonElement;
    expect(next.disabled).toBe(true);
  });

  it("zero without a reason never reaches the server", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    await press("0");
    await press("x"); // not a reason key; picker stays open, nothing sent
    expect(server.storedRows).toHaveLength(0);
  });
});

describe("failure handling", () => {
  it("queues offline submissions and flushes them on reconnect", async () => {
    const server = MockServer.singleItem();
    const app = await startApp(server);

    server.offline = true;
    await press("1"); // rank 1 queued
    expect(server.storedRows).toHaveLength(0); // server count unchanged until ack
    expect(document.querySelector(".banner.visible")?.textContent).toContain("queued");
    const state = document.querySelectorAll(".candidate .tag-state")[0]?.textContent;
    expect(state).toContain("queued");

    server.offline = false;
    await app.flushQueue();
    await tick();
    expect(server.storedRows).toHaveLength(1);
    expect(document.querySelectorAll(".candidate")[0]?.classList.contains("good")).toBe(true);
    expect(document.querySelector(".banner.visible")).toBeNull();
  });

  it("rolls focus back when the server rejects a tag", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    await press("1"); // rank 1 acked, focus now on rank 2
    // second tap on rank 1 without overwrite would 409; force it via direct key path:
    // move focus back to rank 1 and re-tag -> app sets overwrite because state is "tagged"
    await press("ArrowUp");
    await press("1");
    const rows = server.export();
    expect(rows.filter((r) => r.rank === 1)).toHaveLength(1);
  });

  it("degrades to local counts when the summary endpoint fails", async () => {
    const server = MockServer.singleItem();
    const failingSummary = new ApiClient(async (url, init) => {
      if (String(url).startsWith("/summary")) throw new TypeError("fetch failed");
      return server.fetch(url, init);
    });
    const app = new App(appRoot(), failingSummary, 5);
    await app.start("ann");
    await tick();
    expect(document.getElementById("progress-counter")?.textContent).toBe(
      "0 / 1 items complete",
    );
    expect(document.querySelector(".summary-missing")).not.toBeNull();
  });
});

describe("display details", () => {
  it("shows headword, sampa and live percentages after completion", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    expect(document.querySelector(".headword")?.textContent).toBe("frage");
    expect(document.querySelector(".sampa")?.textContent).toBe("f r 2: g @");
    for (const key of ["1", "1", "1", "1", "1"]) await press(key);
    await tick();
    const table = document.querySelector("table.summary");
    expect(table?.textContent).toContain("ZH");
    expect(table?.textContent).toContain("100");
  });

  it("h toggles headword visibility", async () => {
    const server = MockServer.singleItem();
    await startApp(server);
    await press("h");
    expect(document.querySelector(".headword")?.textContent).toContain("hidden");
    await press("h");
    expect(document.querySelector(".headword")?.textContent).toBe("frage");
  });

  it("resumed items render previously acknowledged tags", () => {
    const flow = new ItemFlow(
      {
        item_id: "x:ZH",
        headword: "x",
        dialect: "ZH",
        sampa: "x",
        candidates: [1, 2, 3, 4, 5].map((r) => ({ rank: r, text: `c${r}` })),
        tagged: {
          "1": {
            headword: "x", dialect: "ZH", rank: 1, candidate: "c1",
            tag: 0, annotator: "ann", reason: "ADDED_LETTER",
          },
        },
      },
      5,
    );
    expect(flow.state(1)).toEqual({ status: "tagged", tag: 0, reason: "ADDED_LETTER" });
    expect(flow.focus).toBe(2);
    expect(flow.allAcked()).toBe(false);
  });
});

describe("ItemFlow", () => {
  const item = {
    item_id: "i:ZH",
    headword: "i",
    dialect: "ZH",
    sampa: "i",
    candidates: [1, 2, 3].map((r) => ({ rank: r, text: `c${r}` })),
  };

  it("advances focus to the next untagged rank, wrapping", () => {
    const flow = new ItemFlow(item, 3);
    flow.markAcked(1, 1);
    flow.markAcked(3, 1);
    flow.focus = 3;
    flow.advanceFocus();
    expect(flow.focus).toBe(2);
  });

  it("allAcked requires every rank", () => {
    const flow = new ItemFlow(item, 3);
    flow.markAcked(1, 1);
    flow.markAcked(2, 0, "TWO_MINOR");
    expect(flow.allAcked()).toBe(false);
    flow.markAcked(3, 1);
    expect(flow.allAcked()).toBe(true);
  });

  it("pending is not acknowledged", () => {
    const flow = new ItemFlow(item, 3);
    flow.markPending(1);
    flow.markAcked(2, 1);
    flow.markAcked(3, 1);
    expect(flow.allAcked()).toBe(false);
  });
});
