"""Verify that a wireless link is on-body from its RSS fluctuations.

The package simulates on-body and off-body RSS traces, decomposes them into
large- and small-scale variations, classifies segments against a calibrated
profile, and runs challenge-response protocols against scripted attackers.
"""
from .channel import (BodyGeometry, EnvDynamics, LinkKind, LinkSpec, MotionProcess,
                      MotionState, RadioConfig, RssTrace, constant_distance,
                      creeping_field, generate_trace)
from .decomposition import (ClusterTree, ComponentSet, Segment, VariationSplit,
                            decompose, diagonal_average, dtw_distance, embed,
                            embedding_dimension, fast_ica, scica, segment_trace)
from .errors import (CalibrationDegenerate, ConfigError, DomainError, EmptyTraceError,
                     SecureTagError, SilentSegment)
from .matching import (CalibrationProfile, Decision, Label, PipelineConfig, calibrate,
                       classify_segment, classify_trace, remove_motion)
from .protocol import (AttackKind, AttackScript, Metrics, ScenarioOutcome, SimNet,
                       build_net, compute_metrics, run_scenario, safety_holds)

__version__ = "0.1.0"
