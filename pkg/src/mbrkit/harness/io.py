"""Line-delimited JSON readers and writers (UTF-8, one record per line)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import InputDataError

KINDS = ("candidate", "sample")


@dataclass(frozen=True)
class CorpusRecord:
    source_id: str
    source_text: str = ""
    references: tuple[str, ...] | None = None


@dataclass(frozen=True)
class CandidateFileRecord:
    source_id: str
    text: str
    kind: str
    origin: str = "external"
    log_prob: float | None = None
    line: int = 0


def read_jsonl(path) -> list[tuple[int, dict]]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise InputDataError(f"{path}: file not found") from None
    except (OSError, UnicodeDecodeError) as e:
        raise InputDataError(f"{path}: {e}") from None
    out = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputDataError(f"{path}:{n}: malformed JSON ({e.msg})") from None
        if not isinstance(rec, dict):
            raise InputDataError(f"{path}:{n}: record must be a JSON object")
        out.append((n, rec))
    return out


def _str_field(path, n, rec, name, required=True, default=None):
    if name not in rec:
        if required:
            raise InputDataError(f"{path}:{n}: missing field {name!r}")
        return default
    if not isinstance(rec[name], str):
        raise InputDataError(f"{path}:{n}: field {name!r} must be a string")
    return rec[name]


def read_corpus(path) -> list[CorpusRecord]:
    out, seen = [], set()
    for n, rec in read_jsonl(path):
        sid = _str_field(path, n, rec, "source_id")
        if sid in seen:
            raise InputDataError(f"{path}:{n}: duplicate source_id {sid!r}")
        seen.add(sid)
        refs = rec.get("references")
        if refs is not None:
            if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
                raise InputDataError(f"{path}:{n}: references must be a list of strings")
            refs = tuple(refs)
        out.append(CorpusRecord(sid, _str_field(path, n, rec, "source_text", False, ""), refs))
    return out


def read_candidates(path, known_sources=None) -> list[CandidateFileRecord]:
    out = []
    for n, rec in read_jsonl(path):
        sid = _str_field(path, n, rec, "source_id")
        if known_sources is not None and sid not in known_sources:
            raise InputDataError(f"{path}:{n}: source_id {sid!r} does not appear in the corpus")
        kind = _str_field(path, n, rec, "kind")
        if kind not in KINDS:
            raise InputDataError(f"{path}:{n}: kind must be one of {list(KINDS)}, got {kind!r}")
        lp = rec.get("log_prob")
        if lp is not None and (isinstance(lp, bool) or not isinstance(lp, (int, float))):
            raise InputDataError(f"{path}:{n}: log_prob must be a number")
        out.append(CandidateFileRecord(sid, _str_field(path, n, rec, "text"), kind,
                                       _str_field(path, n, rec, "origin", False, "external"),
                                       None if lp is None else float(lp), n))
    return out


def dumps(record) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(dumps(rec) + "\n")
    return path


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path
