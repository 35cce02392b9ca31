"""Full-duplex conversational-speech evaluation harness.

Builds hybrid text+voice prompt streams and stitched synthetic dialogs,
streams trial audio frame-by-frame into pluggable duplex agents, and
computes turn-taking metrics (take-over rate, latency, backchannel
statistics, Jensen-Shannon divergence, speaker similarity) with
scripted oracle agents for verification.
"""

from .audio import (
    AudioBuffer,
    FrameClock,
    frames_for_duration,
    gen_sine,
    pad_to_frame,
    read_wav,
    speech_for_text,
    speech_like,
    write_wav,
)
from .codec import DEFAULT_CODEBOOKS, ToyCodec, toy_decode, toy_encode
from .errors import (
    DecodeError,
    DuplexBenchError,
    HandshakeError,
    InvalidArgument,
    JudgeParseError,
    JudgeUnavailable,
    ProtocolError,
    SchemaError,
    StitchError,
    TransportError,
    UndefinedMetric,
)
from .streams import TEXT_PAD, StreamSet, TokenFrame, Vocabulary
from .prompts import (
    HybridPrompt,
    HybridPromptSpec,
    LossWeights,
    build_hybrid_prompt,
    load_prompt_bundle,
    loss_weight_mask,
    save_prompt_bundle,
)
from .stitching import Speaker, StitchedDialog, Turn, load_script, stitch
from .vad import (
    Category,
    SpeechSegment,
    TrialEvents,
    TrialMeta,
    VadParams,
    extract_events,
    frame_levels,
    vad,
)
from .metrics import (
    CategoryMetrics,
    LogMelEmbedder,
    SpeakerSim,
    backchannel_stats,
    category_metrics,
    cosine,
    jsd,
    latency,
    load_embeddings,
    save_embeddings,
    speaker_similarity,
    tor,
)
from .agents import (
    Agent,
    AgentFrameIn,
    AgentFrameOut,
    AgentSession,
    EchoAgent,
    ScriptedAgent,
    SessionCapture,
    SilentAgent,
    ToneAgent,
    stream_audio,
)
from .wire import Transport, WireAgent, connect_wire, serve_forever, serve_session
from .scenarios import (
    Question,
    Scenario,
    TAG_LAYOUT,
    generate_scenarios,
    load_scenarios,
    save_scenarios,
    validate_scenario,
)
from .runner import (
    RunConfig,
    TrialResult,
    judge,
    offline_judge,
    remote_judge,
    report,
    run_scenarios,
    run_trial,
    score_results,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "FrameClock", "frames_for_duration", "gen_sine", "pad_to_frame",
    "read_wav", "speech_for_text", "speech_like", "write_wav",
    "DEFAULT_CODEBOOKS", "ToyCodec", "toy_decode", "toy_encode",
    "DuplexBenchError", "InvalidArgument", "DecodeError", "StitchError",
    "UndefinedMetric", "SchemaError", "ProtocolError", "HandshakeError",
    "TransportError", "JudgeUnavailable", "JudgeParseError",
    "TEXT_PAD", "StreamSet", "TokenFrame", "Vocabulary",
    "HybridPrompt", "HybridPromptSpec", "LossWeights", "build_hybrid_prompt",
    "load_prompt_bundle", "loss_weight_mask", "save_prompt_bundle",
    "Speaker", "StitchedDialog", "Turn", "load_script", "stitch",
    "Category", "SpeechSegment", "TrialEvents", "TrialMeta", "VadParams",
    "extract_events", "frame_levels", "vad",
    "CategoryMetrics", "LogMelEmbedder", "SpeakerSim", "backchannel_stats",
    "category_metrics", "cosine", "jsd", "latency", "load_embeddings",
    "save_embeddings", "speaker_similarity", "tor",
    "Agent", "AgentFrameIn", "AgentFrameOut", "AgentSession", "EchoAgent",
    "ScriptedAgent", "SessionCapture", "SilentAgent", "ToneAgent", "stream_audio",
    "Transport", "WireAgent", "connect_wire", "serve_forever", "serve_session",
    "Question", "Scenario", "TAG_LAYOUT", "generate_scenarios", "load_scenarios",
    "save_scenarios", "validate_scenario",
    "RunConfig", "TrialResult", "judge", "offline_judge", "remote_judge",
    "report", "run_scenarios", "run_trial", "score_results",
    "__version__",
]
