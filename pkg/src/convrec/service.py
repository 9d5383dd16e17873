"""HTTP recommendation service over a built index.

Sessions accumulate turns and explicitly liked items; a recommend call
treats the session transcript plus a trailing ``[REC]`` turn as the query,
exactly mirroring the offline masked-response shape. The index snapshot is
immutable for the lifetime of the app; session state is guarded per
session, so concurrent sessions never observe each other.
"""

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .artifacts import BuildArtifacts
from .corpus import AGENT, SEEKER
from .textnorm import REC_TOKEN, tokenize
from .userselect import FusionConfig, fused_search


@dataclass
class SessionState:
    session_id: str
    turns: list[tuple[str, str]] = field(default_factory=list)  # (role, text)
    liked: set[str] = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)


class TurnBody(BaseModel):
    role: str = Field(default=SEEKER)
    text: str


class LikedBody(BaseModel):
    item_id: str


class RecommendBody(BaseModel):
    k: int = Field(default=10, ge=1)
    user_select: bool = False


def create_app(store: BuildArtifacts, fusion: FusionConfig | None = None) -> FastAPI:
    app = FastAPI(title="convrec", version="0.1.0")
    # the browser client may be served from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    fusion = fusion or FusionConfig()
    sessions: dict[str, SessionState] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def get_session(session_id: str) -> SessionState | None:
        with registry_lock:
            return sessions.get(session_id)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session():
        session = SessionState(session_id=uuid.uuid4().hex)
        with registry_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id}

    @app.post("/sessions/{session_id}/turns")
    def add_turn(session_id: str, body: TurnBody):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        if body.role not in (SEEKER, AGENT):
            return JSONResponse(
                status_code=400,
                content={"detail": f"role must be {SEEKER!r} or {AGENT!r}"},
            )
        with session.lock:
            session.turns.append((body.role, body.text))
            count = len(session.turns)
        return {"session_id": session_id, "turns": count}

    @app.post("/sessions/{session_id}/liked")
    def mark_liked(session_id: str, body: LikedBody):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        if body.item_id not in store.catalog:
            return JSONResponse(status_code=404, content={"detail": "unknown item"})
        with session.lock:
            session.liked.add(body.item_id)
            liked = sorted(session.liked)
        return {"session_id": session_id, "liked": liked}

    @app.post("/sessions/{session_id}/recommend")
    def recommend(session_id: str, body: RecommendBody):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        with session.lock:
            texts = [text for _, text in session.turns]
            liked = set(session.liked)
        # the live query mirrors the training shape: context plus a masked
        # agent response that is just the sentinel
        query = tokenize(" ".join(texts + [REC_TOKEN]))
        if body.user_select:
            ranked = fused_search(
                store.index, store.profiles, query, liked, fusion, body.k
            )
        else:
            ranked = store.index.search(query, body.k)
        items = [
            {
                "item_id": ref,
                "title": store.catalog[ref].title if ref in store.catalog else "",
                "score": score,
                "rank": position,
            }
            for position, (ref, score) in enumerate(ranked, start=1)
        ]
        return {"session_id": session_id, "items": items}

    @app.get("/items/{item_id}")
    def get_item(item_id: str):
        item = store.catalog.get(item_id)
        if item is None:
            return JSONResponse(status_code=404, content={"detail": "unknown item"})
        meta = store.metadata.get(item_id)
        return {
            "item_id": item.item_id,
            "title": item.title,
            "plot": meta.plot if meta else "",
            "director": meta.director if meta else "",
            "actors": list(meta.actors) if meta else [],
        }

    return app
