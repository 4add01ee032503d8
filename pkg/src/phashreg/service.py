"""HTTP+JSON service over a registry.

Verification is read-only and side-effect free; registrations serialize
behind the registry's writer lock.  Binary values travel hex-encoded.
A register request may carry a ``request_id``; repeating one returns the
originally created entry instead of registering again.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import InvalidImageError, NotFoundError
from .hashing import PerceptualHash, hash_image_bytes
from .prefix import prefix_from_hex
from .registry import Registry


class RegisterRequest(BaseModel):
    hash: str | None = None
    image_hex: str | None = None
    platform_id: str = ""
    created_at: str | None = None
    extra: dict[str, Any] | None = None
    request_id: str | None = None


class VerifyRequest(BaseModel):
    hash: str | None = None
    image_hex: str | None = None
    tau: int | None = None
    flip_tolerance: int | None = None


def _resolve_hash(hash_hex: str | None, image_hex: str | None) -> PerceptualHash:
    if (hash_hex is None) == (image_hex is None):
        raise HTTPException(status_code=400, detail="supply exactly one of 'hash' or 'image_hex'")
    try:
        if hash_hex is not None:
            return PerceptualHash.from_hex(hash_hex)
        return hash_image_bytes(bytes.fromhex(image_hex))
    except (ValueError, InvalidImageError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(registry: Registry, snapshot_dir: str | Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if snapshot_dir is not None:
            registry.snapshot(snapshot_dir)

    app = FastAPI(title="phashreg", version="0.1.0", lifespan=lifespan)
    seen_requests: dict[str, int] = {}

    @app.post("/register")
    def register(body: RegisterRequest) -> dict:
        if body.request_id is not None and body.request_id in seen_requests:
            entry = registry.get_entry(seen_requests[body.request_id])
            return {"entry": entry.to_json(), "root": registry.root().hex(), "duplicate": True}
        ph = _resolve_hash(body.hash, body.image_hex)
        entry = registry.register(
            ph, platform_id=body.platform_id, created_at=body.created_at, extra=body.extra
        )
        if body.request_id is not None:
            seen_requests[body.request_id] = entry.entry_id
        return {"entry": entry.to_json(), "root": registry.root().hex(), "duplicate": False}

    @app.post("/verify")
    def verify(body: VerifyRequest) -> dict:
        ph = _resolve_hash(body.hash, body.image_hex)
        try:
            verdict = registry.verify(ph, tau=body.tau, flip_tolerance=body.flip_tolerance)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return verdict.to_json()

    @app.get("/stats")
    def stats() -> dict:
        s = registry.stats()
        return {
            "total_entries": s.total_entries,
            "nonempty_buckets": s.nonempty_buckets,
            "mean_occupancy": s.mean_occupancy,
            "histogram": {str(k): v for k, v in sorted(s.histogram.items())},
        }

    @app.get("/root")
    def root() -> dict:
        return {"root": registry.root().hex(), "ledger_records": len(registry.ledger)}

    @app.get("/proof/{prefix}")
    def proof(prefix: str) -> dict:
        try:
            key = prefix_from_hex(prefix)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            return registry.prove(key).to_json()
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    return app


def serve(registry_dir: str | Path, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Load the registry, verify its integrity, and run the service.

    Integrity failures abort startup with the diagnostic on stderr.
    """
    import uvicorn

    registry = Registry.restore(registry_dir)
    app = create_app(registry, snapshot_dir=registry_dir)
    uvicorn.run(app, host=host, port=port)
