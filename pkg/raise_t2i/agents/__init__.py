"""
Agent protocol: the analyzer, the two rewriters and the verifier.

All four share one chat backend; requests and reply schemas are fixed.
"""

from .prompts import (
    ANALYZER_SYSTEM_PROMPT,
    EDIT_REWRITER_SYSTEM_PROMPT,
    GEN_REWRITER_SYSTEM_PROMPT,
    VERIFIER_SYSTEM_PROMPT,
)
from .protocol import (
    PROMPT_UNCHANGED,
    AgentCallRecord,
    AgentClient,
    BestContext,
    ChatRequest,
    ImagePart,
    RoundBestExtras,
    TextPart,
    build_payload,
    render_analyzer_request,
    render_edit_rewriter_request,
    render_gen_rewriter_request,
    render_verifier_request,
    text_part,
    verifier_feedback,
)
from .schemas import (
    REPLY_MODELS,
    SYSTEM_PROMPTS,
    AgentRole,
    AnalyzerReply,
    EditRewriterReply,
    GenRewriterReply,
    VerifierReply,
    parse_reply,
    response_format,
)

__all__ = [
    "ANALYZER_SYSTEM_PROMPT",
    "EDIT_REWRITER_SYSTEM_PROMPT",
    "GEN_REWRITER_SYSTEM_PROMPT",
    "VERIFIER_SYSTEM_PROMPT",
    "PROMPT_UNCHANGED",
    "AgentCallRecord",
    "AgentClient",
    "BestContext",
    "ChatRequest",
    "ImagePart",
    "RoundBestExtras",
    "TextPart",
    "build_payload",
    "render_analyzer_request",
    "render_edit_rewriter_request",
    "render_gen_rewriter_request",
    "render_verifier_request",
    "text_part",
    "verifier_feedback",
    "REPLY_MODELS",
    "SYSTEM_PROMPTS",
    "AgentRole",
    "AnalyzerReply",
    "EditRewriterReply",
    "GenRewriterReply",
    "VerifierReply",
    "parse_reply",
    "response_format",
]
