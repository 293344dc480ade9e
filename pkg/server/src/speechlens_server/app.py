"""The HTTP surface: /schema, /predict, /predict_batch.

Bodies are parsed by hand rather than through request models so the
status codes stay meaningful: 400 for anything malformed, 422 reserved
for a well-formed request at the wrong sample rate, 500 when the model
itself fails. Responses carry per-head probability dicts in declared
head and class order, so identical requests serialize identically.
"""

import base64
import binascii
import json
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Request

from .config import ConfigError, ServerConfig

__all__ = ["InferenceBackend", "create_app", "serve"]


class InferenceBackend:
    """What the app needs from a model.

    labels is an ordered tuple naming the logit columns. logits takes a
    list of 1-D float sample arrays and returns an (n, len(labels))
    array-like of raw scores. Calls are serialized by the app, so
    implementations need not be thread-safe.
    """

    labels: tuple = ()

    def logits(self, batch):
        raise NotImplementedError


def _softmax(v):
    z = np.exp(v - np.max(v))
    return z / np.sum(z)


def _bad(msg):
    return HTTPException(status_code=400, detail=msg)


def create_app(config: ServerConfig, backend: InferenceBackend) -> FastAPI:
    """Wire a validated config and a backend into a FastAPI app.

    The backend's label set must equal the config's, element for element;
    a checkpoint the mapping does not fully describe is refused here, at
    startup, not at request time.
    """
    labels = tuple(backend.labels)
    if len(set(labels)) != len(labels):
        raise ConfigError("backend reports duplicate labels")
    if set(labels) != set(config.label_names):
        missing = sorted(set(labels) - set(config.label_names))
        extra = sorted(set(config.label_names) - set(labels))
        raise ConfigError(
            f"config does not match the model's label set "
            f"(unmapped: {missing}, unknown to model: {extra})"
        )

    col = {label: i for i, label in enumerate(labels)}
    if config.mode == "composite":
        # head -> [(class, [logit columns to sum])] in declared order
        groups = {}
        for name, classes in config.heads:
            members = {c: [] for c in classes}
            for label, assignment in config.labels:
                members[dict(assignment)[name]].append(col[label])
            groups[name] = [(c, members[c]) for c in classes]
    else:
        groups = {name: [] for name, _ in config.heads}
        for label, assignment in config.labels:
            (head, cls), = assignment
            groups[head].append((cls, col[label]))
        for name, classes in config.heads:
            order = {c: i for i, c in enumerate(classes)}
            groups[name].sort(key=lambda pair: order[pair[0]])

    lock = threading.Lock()

    def probs(row):
        out = {}
        if config.mode == "composite":
            flat = _softmax(row)
            for name, _ in config.heads:
                out[name] = {c: float(np.sum(flat[cols])) for c, cols in groups[name]}
        else:
            for name, _ in config.heads:
                classes = [c for c, _ in groups[name]]
                p = _softmax(row[[i for _, i in groups[name]]])
                out[name] = {c: float(v) for c, v in zip(classes, p)}
        return out

    def parse_object(body):
        try:
            obj = json.loads(body)
        except (ValueError, UnicodeDecodeError) as exc:
            raise _bad(f"body is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise _bad("body must be a JSON object")
        return obj

    def parse_item(obj):
        if not isinstance(obj, dict):
            raise _bad("each item must be an object")
        for key in ("sample_rate", "samples_b64"):
            if key not in obj:
                raise _bad(f"item is missing {key!r}")
        rate = obj["sample_rate"]
        if isinstance(rate, bool) or not isinstance(rate, int):
            raise _bad(f"sample_rate must be an integer, got {rate!r}")
        enc = obj["samples_b64"]
        if not isinstance(enc, str):
            raise _bad("samples_b64 must be a base64 string")
        try:
            raw = base64.b64decode(enc.encode("ascii"), validate=True)
        except (binascii.Error, UnicodeEncodeError) as exc:
            raise _bad(f"samples_b64 is not valid base64: {exc}") from exc
        if not raw or len(raw) % 4:
            raise _bad(f"decoded payload of {len(raw)} bytes is not float32 samples")
        samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise _bad("samples contain non-finite values")
        return rate, samples

    def check_rate(rate):
        if rate != config.sample_rate:
            raise HTTPException(
                status_code=422,
                detail=f"expected sample rate {config.sample_rate}, got {rate}",
            )

    def infer(batch):
        with lock:
            try:
                rows = backend.logits(batch)
            except Exception as exc:
                raise HTTPException(
                    status_code=500, detail=f"inference failed: {exc}"
                ) from exc
        rows = np.asarray(rows, dtype=np.float64)
        if rows.shape != (len(batch), len(labels)) or not np.all(np.isfinite(rows)):
            raise HTTPException(
                status_code=500, detail="inference produced a malformed logit matrix"
            )
        return rows

    app = FastAPI(title="speechlens-server", docs_url=None, redoc_url=None)

    @app.get("/schema")
    def schema():
        return {
            "sample_rate": config.sample_rate,
            "heads": config.head_mapping(),
            "mapping": config.mode,
        }

    @app.post("/predict")
    async def predict(request: Request):
        rate, samples = parse_item(parse_object(await request.body()))
        check_rate(rate)
        return {"heads": probs(infer([samples])[0])}

    @app.post("/predict_batch")
    async def predict_batch(request: Request):
        obj = parse_object(await request.body())
        if not isinstance(obj.get("items"), list):
            raise _bad("body needs an 'items' list")
        parsed = [parse_item(item) for item in obj["items"]]
        for rate, _ in parsed:
            check_rate(rate)
        if not parsed:
            return {"results": []}
        rows = infer([samples for _, samples in parsed])
        return {"results": [{"heads": probs(row)} for row in rows]}

    return app


def serve(config: ServerConfig, backend: InferenceBackend | None = None):
    """Run the adapter until interrupted.

    Without an explicit backend the checkpoint named by the config is
    loaded, which pulls in torch and transformers.
    """
    if backend is None:
        from .checkpoint import CheckpointBackend

        backend = CheckpointBackend(config.checkpoint, config.sample_rate)
    import uvicorn

    uvicorn.run(create_app(config, backend), host=config.host, port=config.port)
