"""Eigenvalues of limited-memory quasi-Newton matrices.

BFGS, DFP, SR1 and the Broyden convex class are held in compact form
``B = gamma I + Psi M Psi^T``; the spectrum follows from the triangular
factor of ``Psi``, which is updated as pairs are added and evicted.
"""
from .compact import (
    BroydenRecursionState,
    CompactForm,
    UpdateFamily,
    broyden_m_inverse,
    build_bfgs,
    build_broyden,
    build_compact,
    build_dfp,
    build_sr1,
    shuffle_permutation,
)
from .errors import (
    ConvergenceError,
    CurvatureError,
    DimensionError,
    EmptyHistoryError,
    NumericalError,
    PositivityError,
    RankError,
    SingularMatrixError,
    SingularMError,
    SkippedUpdateWarning,
)
from .pair_store import GramBlocks, Pair, PairBuffer, curvature_check, gram_blocks, push_pair
from .qr_engine import (
    Deficient,
    FullRank,
    IllConditioned,
    ThinQR,
    append_column,
    delete_leading_columns,
    qr_from_scratch,
    rank_status,
)
from .spectrum import (
    IncrementalSpectrum,
    Spectrum,
    condition_number,
    eigenvalues,
    relative_error,
    singular_values,
    symmetric_eig_small,
)

__version__ = "0.1.0"
