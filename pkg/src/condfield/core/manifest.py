"""Run manifests: what a command read, wrote and how long each stage took."""

import uuid
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from condfield import __version__
from condfield.models.types import RunManifest
from condfield.services import PerformanceLogger, create_run_logger


class ManifestRecorder:
    """Collects manifest entries while a command runs.

    ``log`` is bound to the run id written into the manifest, so log lines of
    one invocation can be matched to its outputs.
    """

    def __init__(self, command: str, argv: list[str], threads: int = 1) -> None:
        run_id = uuid.uuid4().hex[:12]
        self.log = create_run_logger("cli", run_id)
        self.manifest = RunManifest(
            run_id=run_id,
            command=command,
            argv=list(argv),
            tool_version=__version__,
            started_at=datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            threads=threads,
        )

    def seed(self, name: str, value: int) -> None:
        self.manifest.seeds[name] = int(value)

    def config(self, name: str, value: BaseModel | dict[str, Any]) -> None:
        data = value.model_dump(mode="json") if isinstance(value, BaseModel) else value
        self.manifest.configs[name] = data

    def input(self, path: str | Path) -> None:
        self.manifest.inputs.append(str(path))

    def output(self, path: str | Path) -> Path:
        self.manifest.outputs.append(str(path))
        return Path(path)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        perf = PerformanceLogger(self.log, name)
        try:
            yield
        except Exception:
            self.manifest.stage_timings_ms[name] = perf.finish(result="error")
            raise
        self.manifest.stage_timings_ms[name] = perf.finish()

    def write(self, prefix: str | Path) -> Path:
        """Write ``<prefix>_manifest.json`` listing only outputs present on disk."""
        path = Path(f"{prefix}_manifest.json")
        missing = [p for p in self.manifest.outputs if not Path(p).is_file()]
        if missing:
            self.log.warning(
                type="manifest_missing_outputs",
                missing=missing,
                msg=f"{len(missing)} declared output(s) were not written",
            )
            self.manifest.outputs = [p for p in self.manifest.outputs if p not in missing]
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path
