"""Annotation service: feeds ranked candidate items to annotators and
records their 0/1 judgments in an append-only JSONL store.

The item pool is an immutable TSV loaded at startup (one row per candidate,
header ``headword<TAB>dialect<TAB>sampa<TAB>rank<TAB>candidate``). Sessions
persist to a JSON file across restarts. Every accepted tag is fsynced to the
store before the request is acknowledged; overwrites append and are resolved
last-write-wins at export time.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .evaluation import REASON_CODES, TagRecord, rank_accuracy
from .lexicon import Dialect, LexiconError


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int = 400) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass(frozen=True)
class PoolItem:
    item_id: str
    headword: str
    dialect: Dialect
    sampa: str
    candidates: tuple[str, ...]  # index r-1 = rank r

    def as_json_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "headword": self.headword,
            "dialect": self.dialect.value,
            "sampa": self.sampa,
            "candidates": [
                {"rank": r, "text": text} for r, text in enumerate(self.candidates, start=1)
            ],
        }


POOL_HEADER = ("headword", "dialect", "sampa", "rank", "candidate")


def load_pool(path: str | Path, top_k: int = 5) -> dict[str, PoolItem]:
    """Items keyed by id, ordered by headword then dialect code."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split("\t")) != POOL_HEADER:
        raise LexiconError(f"pool file must start with header {POOL_HEADER!r}")
    grouped: dict[tuple[str, str], dict] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise LexiconError(f"pool line {lineno}: expected 5 columns")
        headword, dialect_code, sampa, rank_text, candidate = cols
        dialect = Dialect.parse(dialect_code)
        try:
            rank = int(rank_text)
        except ValueError:
            raise LexiconError(f"pool line {lineno}: bad rank {rank_text!r}")
        if not 1 <= rank <= top_k:
            raise LexiconError(f"pool line {lineno}: rank {rank} outside 1..{top_k}")
        group = grouped.setdefault(
            (headword, dialect_code), {"sampa": sampa, "dialect": dialect, "ranks": {}}
        )
        if group["sampa"] != sampa:
            raise LexiconError(f"pool line {lineno}: conflicting sampa for {headword!r}")
        if rank in group["ranks"]:
            raise LexiconError(f"pool line {lineno}: duplicate rank {rank} for {headword!r}")
        group["ranks"][rank] = candidate
    items: dict[str, PoolItem] = {}
    for (headword, dialect_code), group in sorted(grouped.items()):
        if sorted(group["ranks"]) != list(range(1, top_k + 1)):
            raise LexiconError(
                f"item {headword!r}/{dialect_code} must have exactly ranks 1..{top_k}"
            )
        item_id = f"{headword}:{dialect_code}"
        items[item_id] = PoolItem(
            item_id=item_id,
            headword=headword,
            dialect=group["dialect"],
            sampa=group["sampa"],
            candidates=tuple(group["ranks"][r] for r in range(1, top_k + 1)),
        )
    return items


@dataclass
class Session:
    id: str
    annotator: str
    dialect: str | None
    queue: list[str]
    cursor: int = 0

    def as_json_dict(self) -> dict:
        return {
            "id": self.id,
            "annotator": self.annotator,
            "dialect": self.dialect,
            "queue": self.queue,
            "cursor": self.cursor,
        }


class AnnotationStore:
    """Append-only JSONL log of tag rows; in-memory mirror for reads."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.rows: list[dict] = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.rows.append(json.loads(line))

    def append(self, row: dict) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.rows.append(row)

    def resolved(self) -> list[dict]:
        """Last-write-wins per (annotator, item, rank), deterministic order."""
        latest: dict[tuple[str, str, int], dict] = {}
        for row in self.rows:
            latest[(row["annotator"], row["item_id"], int(row["rank"]))] = row
        return sorted(
            latest.values(),
            key=lambda r: (r["headword"], r["dialect"], r["annotator"], int(r["rank"])),
        )


class ServiceState:
    def __init__(
        self,
        pool: dict[str, PoolItem],
        store: AnnotationStore,
        sessions_path: Path | None,
        top_k: int,
        enforce_reasons: bool,
    ) -> None:
        self.pool = pool
        self.store = store
        self.sessions_path = sessions_path
        self.top_k = top_k
        self.enforce_reasons = enforce_reasons
        self.lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        if sessions_path and sessions_path.exists():
            data = json.loads(sessions_path.read_text(encoding="utf-8"))
            for sid, s in data.items():
                self.sessions[sid] = Session(
                    id=s["id"],
                    annotator=s["annotator"],
                    dialect=s.get("dialect"),
                    queue=list(s["queue"]),
                    cursor=int(s["cursor"]),
                )

    def _persist_sessions(self) -> None:
        if not self.sessions_path:
            return
        payload = {sid: s.as_json_dict() for sid, s in self.sessions.items()}
        tmp = self.sessions_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, self.sessions_path)

    def tagged_ranks(self, annotator: str, item_id: str) -> dict[int, dict]:
        out: dict[int, dict] = {}
        for row in self.store.rows:
            if row["annotator"] == annotator and row["item_id"] == item_id:
                out[int(row["rank"])] = row
        return out

    def item_complete(self, annotator: str, item_id: str) -> bool:
        return len(self.tagged_ranks(annotator, item_id)) >= self.top_k

    def create_session(self, annotator: str, dialect: str | None) -> Session:
        if not annotator.strip():
            raise ServiceError("bad_annotator", "annotator name required")
        if dialect is not None:
            Dialect.parse(dialect)  # raises LexiconError on bad code
        if not self.pool:
            raise ServiceError("empty_pool", "no items loaded", status=400)
        queue = [
            item_id
            for item_id, item in self.pool.items()
            if (dialect is None or item.dialect.value == dialect)
            and not self.item_complete(annotator, item_id)
        ]
        if not queue:
            raise ServiceError("empty_queue", "no untagged items for this filter")
        session = Session(id=uuid.uuid4().hex[:12], annotator=annotator, dialect=dialect, queue=queue)
        with self.lock:
            self.sessions[session.id] = session
            self._persist_sessions()
        return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}", status=404)
        return session

    def next_items(self, session: Session, n: int) -> list[PoolItem]:
        return [self.pool[i] for i in session.queue[session.cursor : session.cursor + n]]

    def submit(self, body: "TagBody") -> dict:
        session = self.get_session(body.session_id)
        if body.item_id not in self.pool:
            raise ServiceError("unknown_item", f"no item {body.item_id!r}", status=404)
        if body.item_id not in session.queue:
            raise ServiceError("item_not_in_session", f"{body.item_id!r} is not in this session")
        if not 1 <= body.rank <= self.top_k:
            raise ServiceError("bad_rank", f"rank must be in 1..{self.top_k}")
        if body.tag not in (0, 1):
            raise ServiceError("bad_tag", "tag must be 0 or 1")
        if body.reason is not None and body.reason not in REASON_CODES:
            raise ServiceError("bad_reason", f"reason must be one of {REASON_CODES}")
        if body.tag == 1 and body.reason is not None:
            raise ServiceError("bad_reason", "reason is only allowed on 0-tags")
        if body.tag == 0 and self.enforce_reasons and body.reason is None:
            raise ServiceError("reason_required", "0-tags require a criteria reason")
        item = self.pool[body.item_id]
        with self.lock:
            already = self.tagged_ranks(session.annotator, body.item_id)
            if body.rank in already and not body.overwrite:
                raise ServiceError(
                    "already_tagged",
                    f"rank {body.rank} of {body.item_id!r} already tagged; set overwrite",
                    status=409,
                )
            row = {
                "headword": item.headword,
                "dialect": item.dialect.value,
                "rank": body.rank,
                "candidate": item.candidates[body.rank - 1],
                "tag": body.tag,
                "annotator": session.annotator,
                "item_id": body.item_id,
                "session_id": session.id,
                "ts": body.client_ts if body.client_ts is not None else time.time(),
            }
            if body.reason is not None:
                row["reason"] = body.reason
            self.store.append(row)
            item_complete = self.item_complete(session.annotator, body.item_id)
            while session.cursor < len(session.queue) and self.item_complete(
                session.annotator, session.queue[session.cursor]
            ):
                session.cursor += 1
            self._persist_sessions()
        return {"record": _public_record(row), "cursor": session.cursor, "item_complete": item_complete}

    def export(
        self,
        annotator: str | None,
        dialect: str | None,
        tag: int | None,
        rank: int | None = None,
    ) -> list[dict]:
        rows = []
        for row in self.store.resolved():
            if annotator is not None and row["annotator"] != annotator:
                continue
            if dialect is not None and row["dialect"] != dialect:
                continue
            if tag is not None and int(row["tag"]) != tag:
                continue
            if rank is not None and int(row["rank"]) != rank:
                continue
            rows.append(_public_record(row))
        return rows

    def summary(self, annotator: str | None, dialect: str | None) -> dict:
        rows = [
            row
            for row in self.store.resolved()
            if (annotator is None or row["annotator"] == annotator)
            and (dialect is None or row["dialect"] == dialect)
        ]
        # only items with full rank coverage enter the table
        by_item: dict[tuple[str, str], list[dict]] = {}
        for row in rows:
            by_item.setdefault((row["annotator"], row["item_id"]), []).append(row)
        complete = [
            row for group in by_item.values() if len(group) == self.top_k for row in group
        ]
        records = [TagRecord.from_json_dict(_public_record(r)) for r in complete]
        table = rank_accuracy(records, top_k=self.top_k)
        payload = table.as_json_dict()
        payload["records"] = len(rows)
        payload["complete_items"] = len(complete) // self.top_k if self.top_k else 0
        return payload


def _public_record(row: dict) -> dict:
    rec = {
        "headword": row["headword"],
        "dialect": row["dialect"],
        "rank": int(row["rank"]),
        "candidate": row["candidate"],
        "tag": int(row["tag"]),
        "annotator": row["annotator"],
    }
    if row.get("reason") is not None:
        rec["reason"] = row["reason"]
    return rec


class SessionBody(BaseModel):
    annotator: str
    dialect: str | None = None


class TagBody(BaseModel):
    session_id: str
    item_id: str
    rank: int
    tag: int
    reason: str | None = None
    client_ts: float | None = None
    overwrite: bool = False


def create_app(
    pool_path: str | Path,
    store_path: str | Path,
    sessions_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
    top_k: int = 5,
    enforce_reasons: bool = True,
) -> FastAPI:
    state = ServiceState(
        pool=load_pool(pool_path, top_k=top_k),
        store=AnnotationStore(store_path),
        sessions_path=Path(sessions_path) if sessions_path else None,
        top_k=top_k,
        enforce_reasons=enforce_reasons,
    )
    app = FastAPI(title="mundartlex annotation service")
    app.state.service = state

    @app.exception_handler(ServiceError)
    async def _service_error(_: Request, exc: ServiceError):
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=exc.status)

    @app.exception_handler(LexiconError)
    async def _lexicon_error(_: Request, exc: LexiconError):
        return JSONResponse({"code": "bad_request", "message": str(exc)}, status_code=400)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse({"code": "invalid_request", "message": str(exc)}, status_code=400)

    @app.post("/sessions")
    def create_session(body: SessionBody):
        session = state.create_session(body.annotator, body.dialect)
        return {
            "id": session.id,
            "annotator": session.annotator,
            "dialect": session.dialect,
            "queue_length": len(session.queue),
            "cursor": session.cursor,
            "top_k": state.top_k,
        }

    @app.get("/sessions/{session_id}/items")
    def get_items(session_id: str, n: int = 1):
        session = state.get_session(session_id)
        items = state.next_items(session, max(n, 0))
        payload = []
        for item in items:
            d = item.as_json_dict()
            d["tagged"] = {
                str(rank): _public_record(row)
                for rank, row in state.tagged_ranks(session.annotator, item.item_id).items()
            }
            payload.append(d)
        return {
            "items": payload,
            "cursor": session.cursor,
            "total": len(session.queue),
            "complete": session.cursor >= len(session.queue),
        }

    @app.post("/tags")
    def submit_tag(body: TagBody):
        return state.submit(body)

    @app.get("/export")
    def export(
        annotator: str | None = None,
        dialect: str | None = None,
        tag: int | None = None,
        rank: int | None = None,
        format: str = "jsonl",
    ):
        records = state.export(annotator, dialect, tag, rank)
        if format == "tsv":
            # augmentation triples, e.g. the accepted rank-1 writings
            lines = [f"{r['headword']}\t{r['dialect']}\t{r['candidate']}" for r in records]
            media = "text/tab-separated-values"
        elif format == "jsonl":
            lines = [json.dumps(rec, ensure_ascii=False) for rec in records]
            media = "application/x-ndjson"
        else:
            raise ServiceError("bad_format", f"format must be jsonl or tsv, got {format!r}")
        text = "\n".join(lines)
        return PlainTextResponse(text + ("\n" if text else ""), media_type=media)

    @app.get("/summary")
    def summary(annotator: str | None = None, dialect: str | None = None):
        return state.summary(annotator, dialect)

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<html><body><h1>mundartlex annotation service</h1>"
                "<p>No UI bundle configured. API: POST /sessions, "
                "GET /sessions/{id}/items?n=, POST /tags, /export, /summary.</p>"
                "</body></html>"
            )

    return app
