"""Chromatin-domain sampling toolkit.

Pipeline: binarize epigenomic tracks into an incidence matrix, learn a
Cartesian Ising model from its moment statistics, embed the model onto a
generated hardware graph, draw annealing samples, and score the agreement.
"""

from .embed import (ChainMetrics, Embedding, EmbeddingError, PhysicalIsing,
                    chain_metrics, embed_ising, find_embedding,
                    replicate_cluster, unembed, validate)
from .evaluate import (EvalReport, SweepContext, hamming, r2_log, rel_hamming,
                       scaling_sweep, sweep)
from .ingest import (IncidenceMatrix, ParseError, RawTrack, assemble,
                     bin_signal, binarize, parse_bedgraph)
from .learn import LearnConfig, LearnTrace, learn_params, sample_batch
from .model import (CartesianParams, IsingModel, ModelShape, QuboModel,
                    TemplateBias, apply_bias, apply_threshold, build_qubo,
                    index_map, inverse_index, ising_energy, qubo_energy,
                    qubo_to_ising)
from .sampler import (AnnealSchedule, ReverseSchedule, SampleSet,
                      reverse_anneal, sample_many, simulated_anneal,
                      simulated_quantum_anneal)
from .stats import StatsSummary, compute_stats, stats_of_samples
from .topology import (Graph, HardwareGraph, build_hardware,
                       cartesian_product, marker_intersection_graph, metrics,
                       nucleosome_intersection_graph, objective_graph)

__version__ = "0.1.0"
