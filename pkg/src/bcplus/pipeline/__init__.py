"""Synthesis of BC+ programs from problem statements with a language model in the loop."""

from __future__ import annotations

from .client import Cancelled, ClientError, CompletionClient, LiveClient, MockScriptMissing, ScriptedClient
from .core import (
    STAGES,
    Exchange,
    Pipeline,
    PipelineState,
    Templates,
    last_fenced_block,
    parse_segments,
    run_pipeline,
    split_program_text,
    split_statements,
)

__all__ = [
    "STAGES",
    "Cancelled",
    "ClientError",
    "CompletionClient",
    "Exchange",
    "LiveClient",
    "MockScriptMissing",
    "Pipeline",
    "PipelineState",
    "ScriptedClient",
    "Templates",
    "last_fenced_block",
    "parse_segments",
    "run_pipeline",
    "split_program_text",
    "split_statements",
]
