"""Controllable contextual biasing by fusing with-context and without-context decoding streams."""

from .context import ContextSpec, PhraseTrie, parse_prompt_entities, render_prompt
from .corpus import CorpusGenConfig, EntityLists, EvalRecord, gen_synthetic_corpus, load_dataset, write_dataset
from .decoding import BeamHypothesis, DecodeResult, greedy_decode, joint_beam_decode, joint_greedy_decode
from .estimator import JointDecoder
from .evaluation import MetricsReport, SweepConfig, render_report, run_eval
from .fusion import FusionCoefficient, fuse_normalized, fuse_score
from .metrics import EditCounts, EntityScore, cer, edit_alignment, entity_prf
from .models import ConditionalLM, NoisyChannelLM, TableLM, Vocab, load_model, next_dist, save_model

__version__ = "0.1.0"

__all__ = [
    "BeamHypothesis",
    "ConditionalLM",
    "ContextSpec",
    "CorpusGenConfig",
    "DecodeResult",
    "EditCounts",
    "EntityLists",
    "EntityScore",
    "EvalRecord",
    "FusionCoefficient",
    "JointDecoder",
    "MetricsReport",
    "NoisyChannelLM",
    "PhraseTrie",
    "SweepConfig",
    "TableLM",
    "Vocab",
    "cer",
    "edit_alignment",
    "entity_prf",
    "fuse_normalized",
    "fuse_score",
    "gen_synthetic_corpus",
    "greedy_decode",
    "joint_beam_decode",
    "joint_greedy_decode",
    "load_dataset",
    "load_model",
    "next_dist",
    "parse_prompt_entities",
    "render_prompt",
    "render_report",
    "run_eval",
    "save_model",
    "write_dataset",
]
