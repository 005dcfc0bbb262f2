"""Input file validation and deterministic artifact writing."""

import json
import re
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import structlog

from src.core.exceptions import ConfigError, MissingArtifactError

logger = structlog.get_logger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def artifact_name(device_id: str) -> str:
    """File-system safe stem for a per-device artifact."""
    return _UNSAFE.sub("_", device_id).strip("._") or "device"


def validate_input_file(file_path: str | Path) -> Path:
    """
    Check that an input file exists and is readable.

    Raises:
        ConfigError: the path is missing or not a regular file
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigError(f"Input file not found: {file_path}")
    if not file_path.is_file():
        raise ConfigError(f"Input path is not a file: {file_path}")
    return file_path


def read_bytes(file_path: str | Path) -> bytes:
    return validate_input_file(file_path).read_bytes()


def dumps(data: object) -> str:
    """Byte-stable JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


class ArtifactWriter:
    """Writes artifacts under an output directory and remembers them for cleanup."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        self.written.append(target)
        logger.debug("Artifact written", path=str(target), size_bytes=len(text))
        return target

    def write_json(self, name: str, data: object) -> Path:
        return self.write_text(name, dumps(data))

    def cleanup(self) -> None:
        """Remove every artifact written so far."""
        for target in reversed(self.written):
            try:
                target.unlink(missing_ok=True)
            except OSError as e:
                logger.warning("Failed to remove partial output", path=str(target), error=str(e))
        if self.written:
            logger.info("Removed partial outputs", count=len(self.written))
        self.written.clear()


@contextmanager
def partial_outputs(out_dir: str | Path) -> Iterator[ArtifactWriter]:
    """Yield a writer whose artifacts are removed if the block raises."""
    writer = ArtifactWriter(out_dir)
    try:
        yield writer
    except BaseException:
        writer.cleanup()
        raise


def read_artifact(out_dir: str | Path, name: str, what: str) -> bytes:
    """
    Read an artifact produced by an earlier command.

    Raises:
        MissingArtifactError: the artifact does not exist
    """
    target = Path(out_dir) / name
    if not target.is_file():
        raise MissingArtifactError(
            f"no {what}: {target} not found; run the producing command first"
        )
    return target.read_bytes()
