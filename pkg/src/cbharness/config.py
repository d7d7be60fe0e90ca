"""Run configuration and the backend spec mini-language.

Backend specs:
  mock:oracle                     answers with each request's gold label
  mock:majority:LABEL             constant label
  mock:lexical_overlap:LABEL      label whose words appear in the document,
                                  LABEL when none does
  mock:order_biased[:STRENGTH]    first class in the prompt, defecting with
                                  probability 1-STRENGTH
  mock:noncompliant               prose mixing legal and fabricated labels
  mock:scripted:FILE.json         fixed answer list keyed by request tag
  openai:MODEL@BASE_URL           remote chat-completions endpoint; auth
                                  token read from $CBHARNESS_API_TOKEN

Every seed is explicit in the config and echoed into results files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

from .errors import InputError
from .gateway import Backend, MockBehavior, OpenAIChatBackend, make_mock

TOKEN_ENV = "CBHARNESS_API_TOKEN"


@dataclass
class RunConfig:
    codebook: str | None = None
    dataset: str | None = None
    backend: str | None = None
    seed_split: int = 0
    seed_shuffle: int = 1
    seed_bootstrap: int = 2
    seed_sample: int = 3
    concurrency: int = 4
    out_dir: str = "."

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """JSON config file values, then non-None CLI overrides on top."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except FileNotFoundError:
            raise InputError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise InputError(f"config file is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise InputError("config file must contain a JSON object")
        for key, value in raw.items():
            if key not in _CONFIG_KEYS:
                raise InputError(f"unknown config key: {key!r}")
            values[key] = value
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    config = RunConfig(**values)
    if config.concurrency < 1:
        raise InputError("concurrency must be >= 1")
    return config


def parse_backend_spec(spec: str, gold: dict[str, str] | None = None) -> Backend:
    """Build a backend from its spec string. `gold` feeds mock:oracle's
    fallback map for documents whose requests lack gold metadata."""
    if spec.startswith("mock:"):
        rest = spec[len("mock:"):]
        kind, _, arg = rest.partition(":")
        if kind == "oracle":
            params: dict = {"gold": dict(gold or {})}
        elif kind == "majority":
            if not arg:
                raise InputError("mock:majority needs a label, e.g. mock:majority:RIOT")
            params = {"label": arg}
        elif kind == "lexical_overlap":
            if not arg:
                raise InputError("mock:lexical_overlap needs a fallback label")
            params = {"majority_label": arg}
        elif kind == "order_biased":
            params = {}
            if arg:
                try:
                    params["strength"] = float(arg)
                except ValueError:
                    raise InputError(f"order_biased strength must be a number, got {arg!r}")
        elif kind == "noncompliant":
            params = {}
        elif kind == "scripted":
            if not arg:
                raise InputError("mock:scripted needs a JSON script file path")
            try:
                with open(arg, encoding="utf-8") as handle:
                    script = json.load(handle)
            except FileNotFoundError:
                raise InputError(f"script file not found: {arg}")
            except json.JSONDecodeError as exc:
                raise InputError(f"script file is not valid JSON: {exc}")
            if not isinstance(script, list):
                raise InputError("script file must contain a JSON list")
            params = {"script": script}
        else:
            raise InputError(f"unknown mock kind: {kind!r}")
        return make_mock(MockBehavior(kind, params))
    if spec.startswith("openai:"):
        rest = spec[len("openai:"):]
        model, sep, endpoint = rest.partition("@")
        if not sep or not model or not endpoint:
            raise InputError("remote backend spec is openai:<model>@<base-url>")
        return OpenAIChatBackend(endpoint=endpoint, model=model, token=os.environ.get(TOKEN_ENV))
    raise InputError(f"unknown backend spec: {spec!r}")
