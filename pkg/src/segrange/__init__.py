"""segrange: segmented ranges over a simulated multi-locale runtime.

Locality-annotated containers (vector, dense and block-CSR sparse
matrices), lazily evaluated views (transform, take, drop, zip) that
re-expose segmentation, and segment-parallel algorithms (for_each,
reduce, scans, sample sort, copy), all running on in-process locales.

Quick taste::

    import segrange as sr

    with sr.Runtime(4) as rt:
        x = sr.DistributedVector.from_numpy(rt, data_x)
        y = sr.DistributedVector.from_numpy(rt, data_y)
        z = sr.views.transform(sr.views.zip(x, y), lambda t: t[0] * t[1])
        dot = sr.reduce(z, 0.0)
"""

from . import views
from .algorithms import (
    BinaryOp,
    add,
    copy,
    exclusive_scan,
    for_each,
    inclusive_scan,
    maximum,
    minimum,
    multiply,
    reduce,
    sort,
)
from .containers import (
    DistributedDenseMatrix,
    DistributedSparseMatrix,
    DistributedVector,
    TilingDescriptor,
)
from .core import (
    Distribution,
    LocaleId,
    OffLocaleAccess,
    SegmentDescriptor,
    current_locale,
    is_aligned,
    local_view,
    rank_of,
    segments_of,
)
from .mmio import MatrixMarketError
from .runtime import (
    AggregateTaskError,
    Runtime,
    StorageHandle,
    TaskTicket,
    default_locale_count,
)
from .views import NonAlignedZip, get_zip_mode, set_zip_mode

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Runtime",
    "StorageHandle",
    "TaskTicket",
    "AggregateTaskError",
    "default_locale_count",
    "LocaleId",
    "SegmentDescriptor",
    "Distribution",
    "OffLocaleAccess",
    "current_locale",
    "rank_of",
    "segments_of",
    "local_view",
    "is_aligned",
    "DistributedVector",
    "DistributedDenseMatrix",
    "DistributedSparseMatrix",
    "TilingDescriptor",
    "MatrixMarketError",
    "views",
    "NonAlignedZip",
    "get_zip_mode",
    "set_zip_mode",
    "BinaryOp",
    "add",
    "multiply",
    "minimum",
    "maximum",
    "for_each",
    "reduce",
    "inclusive_scan",
    "exclusive_scan",
    "sort",
    "copy",
]
