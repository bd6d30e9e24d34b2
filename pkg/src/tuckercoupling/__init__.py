"""Tucker compression of tall coupling matrices and matrix-free products on them."""
from .aca import ACAFactors, MatrixOracle, aca_dense, row_of_compressed_U, tucker_aca, tucker_aca_scene
from .compression import (
    CompressedCoupling,
    WorkingMemoryTracker,
    compress_matrix,
    index_to_row,
    memory_report,
    row_to_index,
)
from .errors import CapacityError, ContractViolation, FormatError, SceneError, SingularityError
from .kernels import (
    EdgeSource,
    KernelSpec,
    Operator,
    SceneSpec,
    VoxelGrid,
    assemble_column,
    assemble_full,
    efield_kernel,
    greens,
    hfield_kernel,
    make_loop_scene,
    make_plate_scene,
)
from .matvec import aca_adjoint, aca_forward, adjoint, dense_adjoint, dense_forward, forward
from .tensor_core import TuckerTensor, element, hosvd, mode_product, reconstruct

__version__ = "0.1.0"
