"""Simulated Congested-Clique approximate APSP with oracle-backed verification."""
from .config import DEFAULT, Config
from .errors import (CliqueError, DensityViolation, IndexOutOfFamily, PreconditionViolated,
                     QuotaExceeded, SizeViolation)
from .graph import Graph, gen_graph, parse_spec
from .hopset import Hopset, build_hopset, ell_radii, verify_hopset
from .knearest import BinLayout, FilteredMatrix, build_layout, filter_rows, knearest_iter, knearest_one_iter
from .oracles import (DistanceEstimate, KNearestResult, PartialEstimate, exact_apsp, floyd_warshall,
                      hhop_distances, knearest_oracle, max_ratio)
from .pipeline import (PipelineReport, ScaledGraphFamily, combine_scaled, full_apsp, large_bw_apsp,
                       reduce_approximation, run_pipeline, scale_weights, small_diameter_apsp,
                       truncated_apsp)
from .primitives import (brute_force_apsp, compress_zero, hitting_set, lift_compressed, logn_apsp,
                         spanner, spanner_apsp, sparse_minplus_mul)
from .sim import MessageBatch, RoundLedger, broadcast, route_validated, run_parallel
from .skeleton import SkeletonGraph, build_skeleton, lift_skeleton_apsp
from .tropical import INF, TropicalMatrix, minplus_power

__version__ = "0.1.0"
