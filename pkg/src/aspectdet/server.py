"""HTTP workbench backing the human aspect-mapping step.

Serves aspect keywords with high-affinity example segments, accepts mapping
edits into a draft, validates the draft against the labeled dev split on
demand, and commits the result to mapping.json. Edits append to an audit
log that is replayed on restart, so a half-finished session survives a
server bounce. Also serves the static UI bundle when one is present.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .aspects import (
    AspectMapping,
    infer_batch,
    load_keywords,
    load_mapping,
    save_mapping,
    top_keywords,
)
from .checkpoint import file_sha256
from .config import PipelineConfig
from .corpus import load_bundle
from .errors import MissingArtifactError
from .metrics import evaluation_report
from .teacher import forward_segment, load_teacher

EXAMPLES_PER_ASPECT = 5


class MappingEntry(BaseModel):
    mia: int
    gsa: str | None = None


class MappingUpdate(BaseModel):
    entries: list[MappingEntry]


class MappingSession:
    """All mutable workbench state behind a single writer lock."""

    def __init__(self, config: PipelineConfig, checkpoint_path: Path):
        self.config = config
        self.lock = threading.Lock()
        self.model, self.model_meta = load_teacher(checkpoint_path)
        self.bundle = load_bundle(config.corpus_dir)
        self.audit_path = Path(config.workdir) / "mapping_audit.jsonl"

        if config.keywords_path.exists():
            self.keywords = load_keywords(config.keywords_path)
        else:
            self.keywords = top_keywords(
                self.model.aspects, self.model.embeddings, self.bundle.vocabulary,
                top_k=config.top_k,
            )

        self.gsa_names = list(self.bundle.gold_aspect_names)
        if not self.gsa_names:
            raise MissingArtifactError("corpus has no gold aspect names; load labeled splits")
        self.general_index = self.bundle.general_index
        self.draft = self._restore_draft()
        self.examples = self._collect_examples()

    # -- state restore ----------------------------------------------------
    def _blank_mapping(self) -> AspectMapping:
        return AspectMapping(
            entries=[None] * self.model.num_aspects,
            gsa_names=self.gsa_names,
            general_index=self.general_index,
        )

    def _restore_draft(self) -> AspectMapping:
        if self.config.mapping_path.exists():
            draft = load_mapping(self.config.mapping_path, self.model.num_aspects)
        else:
            draft = self._blank_mapping()
        if self.audit_path.exists():
            name_to_idx = {n: i for i, n in enumerate(self.gsa_names)}
            for line in self.audit_path.read_text(encoding="utf-8").splitlines():
                if not line:
                    continue
                event = json.loads(line)
                if event.get("event") != "edit":
                    continue
                for item in event["entries"]:
                    gsa = item.get("gsa")
                    if 0 <= item["mia"] < len(draft.entries):
                        draft.entries[item["mia"]] = name_to_idx.get(gsa) if gsa else None
        return draft

    def _append_audit(self, event: dict) -> None:
        event = {"ts": time.time(), **event}
        with open(self.audit_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")

    # -- views ------------------------------------------------------------
    def _collect_examples(self) -> list[list[dict]]:
        """Per aspect: the training segments with the highest aspect weight."""
        train = self.bundle.split_segments("train")
        betas = np.zeros((len(train), self.model.num_aspects))
        for i, seg in enumerate(train):
            betas[i] = forward_segment(self.model, seg.tokens).beta
        examples: list[list[dict]] = []
        for n in range(self.model.num_aspects):
            order = np.argsort(-betas[:, n], kind="stable")[:EXAMPLES_PER_ASPECT]
            examples.append(
                [
                    {
                        "segment_id": train[i].segment_id,
                        "text": train[i].raw_text,
                        "beta": float(betas[i, n]),
                    }
                    for i in order
                ]
            )
        return examples

    def aspects_payload(self) -> dict:
        return {
            "gsa_names": self.gsa_names,
            "general": (
                self.gsa_names[self.general_index] if self.general_index is not None else None
            ),
            "aspects": [
                {
                    "mia": kw.aspect_index,
                    "keywords": [{"token": t, "score": s} for t, s in kw.keywords],
                    "examples": self.examples[kw.aspect_index],
                    "gsa": (
                        self.gsa_names[self.draft.entries[kw.aspect_index]]
                        if self.draft.entries[kw.aspect_index] is not None
                        else None
                    ),
                }
                for kw in self.keywords
            ],
        }

    def draft_payload(self) -> dict:
        return {
            "gsa_names": self.gsa_names,
            "general": (
                self.gsa_names[self.general_index] if self.general_index is not None else None
            ),
            "entries": [
                {"mia": n, "gsa": (self.gsa_names[e] if e is not None else None)}
                for n, e in enumerate(self.draft.entries)
            ],
            "mapped_count": self.draft.mapped_count,
        }

    # -- mutations ---------------------------------------------------------
    def update(self, update: MappingUpdate) -> dict:
        name_to_idx = {n: i for i, n in enumerate(self.gsa_names)}
        with self.lock:
            staged = list(self.draft.entries)
            for item in update.entries:
                if not (0 <= item.mia < len(staged)):
                    raise HTTPException(422, f"unknown model aspect index {item.mia}")
                if item.gsa is None:
                    staged[item.mia] = None
                elif item.gsa in name_to_idx:
                    staged[item.mia] = name_to_idx[item.gsa]
                else:
                    raise HTTPException(422, f"unknown gold aspect name {item.gsa!r}")
            self.draft.entries = staged
            self._append_audit(
                {"event": "edit", "entries": [e.model_dump() for e in update.entries]}
            )
            return self.draft_payload()

    def validate(self) -> dict:
        with self.lock:
            mapping = AspectMapping(
                entries=list(self.draft.entries),
                gsa_names=self.gsa_names,
                general_index=self.general_index,
            )
        if mapping.mapped_count == 0:
            raise HTTPException(409, "no model aspect is mapped yet")
        dev = [s for s in self.bundle.split_segments("dev") if s.gold_aspect is not None]
        if not dev:
            raise HTTPException(409, "no labeled dev split available for validation")
        labels = infer_batch(self.model, dev, mapping)
        return evaluation_report(
            [s.gold_aspect for s in dev], [lab.y_hat for lab in labels], self.gsa_names
        )

    def commit(self) -> dict:
        with self.lock:
            if self.draft.mapped_count == 0:
                raise HTTPException(409, "refusing to commit a mapping with no mapped aspect")
            save_mapping(
                self.config.mapping_path, self.draft, config_hash=self.config.config_hash()
            )
            digest = file_sha256(self.config.mapping_path)
            self._append_audit({"event": "commit", "hash": digest})
            return {"path": str(self.config.mapping_path), "hash": digest}


def build_app(
    config: PipelineConfig,
    checkpoint_path: Path | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="aspect mapping workbench")
    session: dict[str, MappingSession | None] = {"current": None}

    def require_session() -> MappingSession:
        if session["current"] is None:
            try:
                session["current"] = MappingSession(
                    config, checkpoint_path or config.teacher_path
                )
            except MissingArtifactError as exc:
                raise HTTPException(409, str(exc)) from exc
        return session["current"]

    @app.get("/api/aspects")
    def get_aspects():
        return JSONResponse(require_session().aspects_payload())

    @app.get("/api/mapping")
    def get_mapping():
        return JSONResponse(require_session().draft_payload())

    @app.put("/api/mapping")
    def put_mapping(update: MappingUpdate):
        return JSONResponse(require_session().update(update))

    @app.post("/api/validate")
    def validate():
        return JSONResponse(require_session().validate())

    @app.post("/api/mapping/commit")
    def commit():
        return JSONResponse(require_session().commit())

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
