"""Single-channel complex-valued network training with photonic back-ends.

Dense networks over complex128 carriers, trained by gradient descent on the
squared-modulus loss with conjugation-symmetric activations, plus two
hardware-style realizations of the learned weights: rectangular
interferometer meshes and diffraction-plus-modulation chains.
"""

from .backprop import (
    Gradients,
    LearningCurve,
    TrainConfig,
    backward,
    cr_variant_delta,
    grad_check,
    gradient_gap,
    loss,
    numeric_gradients,
    sgd_step,
    train,
)
from .cnet import (
    Activation,
    ForwardTrace,
    InitKind,
    InitScheme,
    Layer,
    Network,
    activate,
    activate_deriv,
    complex_to_block_real,
    forward,
    init_layer,
    init_network,
    interleave,
    layer_rng,
    load_network,
    network_from_dict,
    network_to_dict,
    pole_distance,
    save_network,
)
from .errors import (
    BadMagic,
    CoherentError,
    CountMismatch,
    DimensionMismatch,
    NearZeroDivisor,
    NonFiniteLoss,
    NotUnitary,
    PoleProximity,
    RankDeficient,
    TruncatedFile,
)
from .photonic import (
    DiffractionOperator,
    DiffractiveLayer,
    GeometryParams,
    MziMesh,
    MziUnit,
    compile_diffractive,
    coupler_matrix,
    decompose_unitary,
    diffraction_distance,
    diffraction_matrix,
    diffractive_forward,
    extract_modulation,
    load_mesh,
    mesh_from_dict,
    mesh_matrix,
    mesh_to_dict,
    mzi_matrix,
    project_to_unitary,
    save_mesh,
)
from .tasks import (
    DiffractiveSampleSpec,
    MnistSet,
    SampleKind,
    SamplePair,
    gen_diffractive_samples,
    load_mnist,
    load_samples,
    mnist_to_pairs,
    phase_xor_dataset,
    real_xor_dataset,
    save_samples,
    write_idx_images,
    write_idx_labels,
)

__version__ = "0.1.0"
