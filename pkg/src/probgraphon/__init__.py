"""Probability-graphons on finite weight spaces: measures, cut distances,
sampling and homomorphism densities."""

from .cutmetric import (
    CutWitness,
    DeltaResult,
    MetricChoice,
    compress,
    cut_distance,
    cut_norm_exact,
    cut_norm_heuristic,
    cut_norm_upper_bound,
    delta_cut,
    weak_regularity_partition,
)
from .exceptions import CapabilityLimitError, InputError, NumericalError
from .graphon import (
    BlockPartitionMap,
    StepGraphon,
    constant_graphon,
    embed_real_graphon,
    from_weighted_graph,
    relabel,
    stepping,
)
from .homdensity import (
    DecoratedGraph,
    edge_joint_measure,
    hom_density_exact,
    hom_density_graph,
    hom_density_mc,
    inverse_counting_decorations,
)
from .measures import (
    Measure,
    ProbabilityMeasure,
    SignedMeasure,
    SubProbabilityMeasure,
    TestFamily,
    WeightSpace,
    dirac,
    f_norm,
    fm_norm,
    kr_norm,
    prohorov,
)
from .sampling import MeasureGraph, SampledGraph, sample_g, sample_g_from_h, sample_h, subsample

__version__ = "0.1.0"
