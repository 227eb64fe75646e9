from .mesh import FemMesh, disc_mesh
from .phantom import Inclusion, PhantomSpec, two_inclusion_phantom
from .solver import (ForwardModel, ForwardSolution, SensorModel, SingularSystemError,
                     assemble_jacobian, pixel_overlap, solve_forward)
from .synth import (Simulator, SyntheticData, add_noise, normalize, replicate_frames,
                    synthesize_measurements)

__all__ = [
    "FemMesh", "ForwardModel", "ForwardSolution", "Inclusion", "PhantomSpec", "SensorModel",
    "Simulator", "SingularSystemError", "SyntheticData", "add_noise", "assemble_jacobian",
    "disc_mesh", "normalize", "pixel_overlap", "replicate_frames", "solve_forward",
    "synthesize_measurements", "two_inclusion_phantom",
]
