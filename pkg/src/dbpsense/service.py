"""Local HTTP JSON API over the run pipeline.

POST /runs executes a full placement run over uploaded inputs and returns
a run id; the GET endpoints read back results, score tables, and network
geometry.  State lives only in the per-run artifact directory (plus an
in-process index of finished runs), so the service can be restarted
freely between runs.
"""

from __future__ import annotations

import json
import tempfile
import threading
import uuid
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .errors import ConfigError, EngineError, StageError
from .pipeline import RunConfig, RunResult, run, save_run, scores_csv_from_result

_TEMPLATES = {
    "env": "env_template.csv",
    "contracts": "contracts_template.csv",
}

# uploaded files land under <runs_dir>/<id>/inputs/ with fixed names
_UPLOAD_NAMES = {
    "network": "network.inp",
    "env_data": "env_data.csv",
    "contracts": "contracts.csv",
}

_CONFIG_KEYS = {
    "models",
    "thresholds",
    "region",
    "weights",
    "objectives",
    "sensor_count",
    "cutoff",
    "injection_node",
    "scenario_count",
    "horizon_hours",
    "interval_hours",
    "fill_method",
    "injection_c0",
    "pareto_ks",
    "seed",
}


class _Registry:
    """Finished runs by id; the artifact directory is the durable copy."""

    def __init__(self):
        self._lock = threading.Lock()
        self._runs: dict[str, RunResult] = {}

    def put(self, run_id: str, result: RunResult) -> None:
        with self._lock:
            self._runs[run_id] = result

    def get(self, run_id: str) -> RunResult:
        with self._lock:
            result = self._runs.get(run_id)
        if result is None:
            raise HTTPException(status_code=404, detail=f"unknown run id {run_id!r}")
        return result


def _error_detail(exc: Exception) -> dict:
    detail = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, StageError):
        detail["stage"] = exc.stage
        detail["error"] = type(exc.cause).__name__
        detail["message"] = str(exc.cause)
    return detail


def _parse_config(raw: str | None) -> dict:
    if not raw:
        return {}
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise HTTPException(
            status_code=400,
            detail={"error": "ConfigError", "message": f"config is not JSON: {exc}"},
        ) from exc
    if not isinstance(parsed, dict):
        raise HTTPException(
            status_code=400,
            detail={"error": "ConfigError", "message": "config must be a JSON object"},
        )
    unknown = sorted(set(parsed) - _CONFIG_KEYS)
    if unknown:
        raise HTTPException(
            status_code=400,
            detail={
                "error": "ConfigError",
                "message": "unknown config keys: " + ", ".join(unknown)
                + " (input paths come from the uploaded files)",
            },
        )
    for key in ("objectives", "pareto_ks"):
        if key in parsed and isinstance(parsed[key], list):
            parsed[key] = tuple(parsed[key])
    return parsed


def create_app(runs_dir: str | Path | None = None) -> FastAPI:
    root = Path(runs_dir) if runs_dir else Path(
        tempfile.mkdtemp(prefix="dbpsense-runs-")
    )
    root.mkdir(parents=True, exist_ok=True)
    registry = _Registry()

    app = FastAPI(title="dbpsense", version="0.1.0")
    app.state.runs_dir = root
    # the web UI is served separately (static files, any port), so the
    # API must answer cross-origin requests from localhost pages
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "runs_dir": str(root)}

    @app.post("/runs")
    def create_run(
        network: UploadFile,
        env_data: UploadFile | None = None,
        contracts: UploadFile | None = None,
        config: str | None = Form(default=None),
    ) -> dict:
        overrides = _parse_config(config)
        run_id = uuid.uuid4().hex[:12]
        inputs = root / run_id / "inputs"
        inputs.mkdir(parents=True)

        paths: dict[str, str | None] = {"env_data": None, "contracts": None}
        for name, upload in (
            ("network", network),
            ("env_data", env_data),
            ("contracts", contracts),
        ):
            if upload is None:
                continue
            target = inputs / _UPLOAD_NAMES[name]
            target.write_bytes(upload.file.read())
            paths[name] = str(target)

        try:
            cfg = RunConfig(
                network_path=paths["network"],
                env_data_path=paths["env_data"],
                contracts_path=paths["contracts"],
                **overrides,
            )
        except TypeError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": "ConfigError", "message": str(exc)},
            ) from exc

        try:
            result = run(cfg)
        except (EngineError, ConfigError, OSError) as exc:
            raise HTTPException(status_code=400, detail=_error_detail(exc)) from exc

        save_run(result, root / run_id)
        registry.put(run_id, result)
        return {"id": run_id, "status": "done"}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        return registry.get(run_id).to_dict()

    @app.get("/runs/{run_id}/scores")
    def get_scores(run_id: str) -> PlainTextResponse:
        result = registry.get(run_id)
        return PlainTextResponse(
            scores_csv_from_result(result), media_type="text/csv"
        )

    @app.get("/network/{run_id}")
    def get_network(run_id: str) -> dict:
        return registry.get(run_id).network_summary

    @app.get("/templates/{kind}")
    def get_template(kind: str) -> PlainTextResponse:
        if kind not in _TEMPLATES:
            raise HTTPException(
                status_code=404, detail=f"no template named {kind!r}"
            )
        text = (
            resources.files("dbpsense") / "data" / "templates" / _TEMPLATES[kind]
        ).read_text(encoding="utf-8")
        return PlainTextResponse(text, media_type="text/csv")

    return app
