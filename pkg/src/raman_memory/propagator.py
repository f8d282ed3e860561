"""Direct integration of the signal/spin-wave equations and Green's-matrix extraction.

Memory (anti-Stokes storage) equations in local time:

    ∂τB = −γ*ε*(τ − κz)·A,     ∂zA = γε(τ − κz)·B

Stokes scattering couples each amplitude to the conjugate of the other:

    ∂τB = g·A*,                 ∂zA = g·B*,       g = γε(τ − κz)

The (τ, z) rectangle is cut into nτ × nz cells. A lives on τ-cell centres at the z faces and
B on z-cell centres at the τ faces. Every cell is closed with the trapezoidal rule in both
directions and solved in closed form, which in flux-weighted variables (√hτ·A, √hz·B) is a
Cayley transform: exactly unitary for the memory and exactly preserving the flux difference
for Stokes. Cells on one anti-diagonal are independent, so the march advances a whole
wavefront at a time and any number of boundary conditions in one batch.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from raman_memory.errors import DomainError, NumericalError
from raman_memory.outputs import Table

logger = logging.getLogger(__name__)

Process = Literal["memory", "stokes"]

MAX_CONTROL_STEP = 0.1


@dataclass(frozen=True)
class ControlField:
    """Sampled control envelope ε(τ) on a uniform mesh over [0, duration].

    The envelope is scaled to unit maximum. Its energy E = ∫|ε|²dτ and the coupling C fix the
    coupling constant γ = C/√E.
    """

    samples: NDArray[np.complex128] = field(repr=False)
    duration: float = 1.0
    c: float = 2.0
    kappa: float = 0.0

    def __post_init__(self):
        """Validate the envelope and freeze its samples."""
        samples = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 2:
            raise DomainError("Control needs at least two samples on a 1-D mesh", {"shape": samples.shape})
        if not np.all(np.isfinite(samples)):
            raise DomainError("Control samples must be finite")
        if self.duration <= 0 or not np.isfinite(self.duration):
            raise DomainError(f"Control duration must be positive, got {self.duration}")
        if self.c < 0 or not np.isfinite(self.c):
            raise DomainError(f"Coupling must be nonnegative, got {self.c}")
        if not np.isfinite(self.kappa):
            raise DomainError("Dispersivity must be finite")

        peak = float(np.max(np.abs(samples)))
        if peak == 0.0:
            if self.c != 0:
                raise DomainError("An all-zero control requires C = 0", {"c": self.c})
        elif abs(peak - 1.0) > 1e-9:
            raise DomainError(f"Control must be scaled to unit maximum, got {peak}", {"max": peak})
        samples.setflags(write=False)

    @classmethod
    def from_samples(cls, samples: ArrayLike, c: float, duration: float = 1.0, kappa: float = 0.0) -> "ControlField":
        """Build a control from arbitrary samples, rescaling them to unit maximum."""
        samples = np.asarray(samples, dtype=complex)
        peak = np.max(np.abs(samples)) if samples.size else 0.0
        if peak == 0:
            raise DomainError("Control samples are identically zero")
        return cls(samples=samples / peak, duration=duration, c=c, kappa=kappa)

    @classmethod
    def from_intensity(cls, intensity: ArrayLike, c: float, duration: float = 1.0, kappa: float = 0.0) -> "ControlField":
        """Real nonnegative control with |ε|² proportional to the given intensity."""
        intensity = np.clip(np.asarray(intensity, dtype=float), 0.0, None)
        return cls.from_samples(np.sqrt(intensity), c=c, duration=duration, kappa=kappa)

    @classmethod
    def constant(cls, c: float, n: int = 401, duration: float = 1.0, kappa: float = 0.0) -> "ControlField":
        """Continuous-wave control of unit amplitude."""
        return cls(samples=np.ones(n, dtype=complex), duration=duration, c=c, kappa=kappa)

    @classmethod
    def off(cls, n: int = 401, duration: float = 1.0) -> "ControlField":
        """No control at all (C = 0)."""
        return cls(samples=np.zeros(n, dtype=complex), duration=duration, c=0.0)

    @classmethod
    def gaussian(cls, c: float, center: float, width: float, n: int = 401, duration: float = 1.0, kappa: float = 0.0) -> "ControlField":
        """Gaussian amplitude exp(−(τ − center)²/(2·width²))."""
        tau = np.linspace(0.0, duration, n)
        return cls.from_samples(np.exp(-0.5 * ((tau - center) / width) ** 2), c=c, duration=duration, kappa=kappa)

    @classmethod
    def random_smooth(cls, c: float, seed: int, n: int = 401, knots: int = 8, duration: float = 1.0, kappa: float = 0.0) -> "ControlField":
        """Smooth random complex envelope: a cubic spline through seeded random knots."""
        rng = np.random.default_rng(seed)
        knot_tau = np.linspace(0.0, duration, knots)
        amplitude = CubicSpline(knot_tau, rng.uniform(0.3, 1.0, knots))
        phase = CubicSpline(knot_tau, rng.uniform(-np.pi, np.pi, knots))
        tau = np.linspace(0.0, duration, n)
        samples = np.clip(amplitude(tau), 0.05, None) * np.exp(1j * phase(tau))
        return cls.from_samples(samples, c=c, duration=duration, kappa=kappa)

    @property
    def n(self) -> int:
        """Number of samples."""
        return self.samples.size

    @property
    def mesh(self) -> NDArray[np.float64]:
        """Uniform sample times on [0, duration]."""
        return np.linspace(0.0, self.duration, self.n)

    @property
    def energy(self) -> float:
        """E = ∫|ε|²dτ by the trapezoidal rule."""
        return float(trapezoid(np.abs(self.samples) ** 2, self.mesh))

    @property
    def gamma(self) -> float:
        """Coupling constant C/√E, zero for a switched-off control."""
        energy = self.energy
        if energy == 0.0 or self.c == 0.0:
            return 0.0
        return self.c / np.sqrt(energy)

    def value_at(self, tau: ArrayLike) -> NDArray[np.complex128]:
        """Linear interpolation of the envelope, zero outside [0, duration]."""
        tau = np.asarray(tau, dtype=float)
        mesh = self.mesh
        values = np.interp(tau, mesh, self.samples.real) + 1j * np.interp(tau, mesh, self.samples.imag)
        outside = (tau < 0.0) | (tau > self.duration)
        return np.where(outside, 0.0, values)

    def intensity_integral(self, tau: ArrayLike) -> NDArray[np.float64]:
        """∫₀^τ|ε|²dτ′ of the linearly interpolated intensity, with τ clipped to [0, duration].

        Equals the trapezoidal energy at τ = duration.
        """
        mesh = self.mesh
        intensity = np.abs(self.samples) ** 2
        h = mesh[1] - mesh[0]
        nodes = np.concatenate(([0.0], np.cumsum(0.5 * h * (intensity[:-1] + intensity[1:]))))
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, self.duration)
        j = np.clip(np.floor(tau / h).astype(int), 0, self.n - 2)
        s = tau - mesh[j]
        return nodes[j] + s * intensity[j] + 0.5 * s**2 * (intensity[j + 1] - intensity[j]) / h


@dataclass(frozen=True)
class BoundaryConditions:
    """Incident signal A(τ, z=0) on the τ-cell centres and initial spin wave B(τ=0, z) on the z-cell centres.

    Either array may carry a trailing batch axis of equal size.
    """

    a_in: NDArray[np.complex128]
    b_in: NDArray[np.complex128]

    def __post_init__(self):
        """Coerce to complex arrays and check the batch axes agree."""
        a_in = np.asarray(self.a_in, dtype=complex)
        b_in = np.asarray(self.b_in, dtype=complex)
        object.__setattr__(self, "a_in", a_in)
        object.__setattr__(self, "b_in", b_in)
        if a_in.ndim not in (1, 2) or a_in.ndim != b_in.ndim or a_in.shape[1:] != b_in.shape[1:]:
            raise DomainError("Boundary arrays must share their batch axis", {"a_in": a_in.shape, "b_in": b_in.shape})

    @classmethod
    def zeros(cls, n_tau: int, n_z: int) -> "BoundaryConditions":
        """Vacuum on both faces."""
        return cls(a_in=np.zeros(n_tau, dtype=complex), b_in=np.zeros(n_z, dtype=complex))


@dataclass(frozen=True)
class FieldSolution:
    """Solution of one propagation run.

    Attributes:
        a: A on (τ-cell centre, z face), shape (nτ, nz + 1); column 0 is the input face
        b: B on (τ face, z-cell centre), shape (nτ + 1, nz); row 0 is the input face
        duration: Pulse window T
        process: "memory" or "stokes"
    """

    a: NDArray[np.complex128] = field(repr=False)
    b: NDArray[np.complex128] = field(repr=False)
    duration: float
    process: Process = "memory"

    @property
    def n_tau(self) -> int:
        """Number of τ cells."""
        return self.a.shape[0]

    @property
    def n_z(self) -> int:
        """Number of z cells."""
        return self.b.shape[1]

    @property
    def tau_centers(self) -> NDArray[np.float64]:
        """τ-cell centres, where A is sampled."""
        return (np.arange(self.n_tau) + 0.5) * self.duration / self.n_tau

    @property
    def tau_faces(self) -> NDArray[np.float64]:
        """τ faces, where B is sampled."""
        return np.linspace(0.0, self.duration, self.n_tau + 1)

    @property
    def z_centers(self) -> NDArray[np.float64]:
        """z-cell centres on [0, 1], where B is sampled."""
        return (np.arange(self.n_z) + 0.5) / self.n_z

    @property
    def z_faces(self) -> NDArray[np.float64]:
        """z faces, where A is sampled."""
        return np.linspace(0.0, 1.0, self.n_z + 1)

    @property
    def a_out(self) -> NDArray[np.complex128]:
        """Transmitted signal A(τ, L)."""
        return self.a[:, -1]

    @property
    def b_out(self) -> NDArray[np.complex128]:
        """Final spin wave B(T, z)."""
        return self.b[-1, :]

    def fluxes(self) -> tuple[float, float, float, float]:
        """Return (∫|A(τ,0)|², ∫|B(0,z)|², ∫|A(τ,L)|², ∫|B(T,z)|²)."""
        h_tau = self.duration / self.n_tau
        h_z = 1.0 / self.n_z

        def norm(values, h):
            return float(h * np.sum(np.abs(values) ** 2))

        return norm(self.a[:, 0], h_tau), norm(self.b[0, :], h_z), norm(self.a_out, h_tau), norm(self.b_out, h_z)

    def cell_centered(self) -> tuple[NDArray, NDArray, NDArray, NDArray]:
        """Average both fields onto the cell centres.

        Returns:
            Tuple (tau, z, A, B) with A and B of shape (nτ, nz)
        """
        a_c = 0.5 * (self.a[:, :-1] + self.a[:, 1:])
        b_c = 0.5 * (self.b[:-1, :] + self.b[1:, :])
        return self.tau_centers, self.z_centers, a_c, b_c


def flux_balance(solution: FieldSolution) -> tuple[float, float]:
    """Conserved combination of boundary fluxes before and after the interaction.

    For the memory the sum ∫|A|² + ∫|B|² is conserved, for Stokes the difference ∫|A|² − ∫|B|².

    Returns:
        Tuple of (input value, output value)
    """
    a_in, b_in, a_out, b_out = solution.fluxes()
    if solution.process == "stokes":
        return a_in - b_in, a_out - b_out
    return a_in + b_in, a_out + b_out


def _check_mesh(n_tau: int, n_z: int) -> None:
    if int(n_tau) != n_tau or int(n_z) != n_z or n_tau < 2 or n_z < 2:
        raise DomainError(f"Propagation meshes need at least two cells each, got n_tau={n_tau}, n_z={n_z}", {"n_tau": n_tau, "n_z": n_z})


def cell_couplings(control: ControlField, n_tau: int, n_z: int) -> NDArray[np.complex128]:
    """Per-cell coupling g for the (τ, z) mesh.

    Each cell covers the retarded window [τ_k − κz, τ_{k+1} − κz] on its centre line. Its
    magnitude is the RMS of |ε| over the part of that window inside the pulse, so that Σ hτ|g|²
    reproduces the trapezoidal pulse energy at κ = 0 and g is continuous in κ. The phase is
    taken at the retarded cell centre.

    Returns:
        Array (nτ, nz) of complex couplings
    """
    _check_mesh(n_tau, n_z)
    gamma = control.gamma
    if gamma == 0.0:
        return np.zeros((n_tau, n_z), dtype=complex)

    h_tau = control.duration / n_tau
    tau_faces = np.linspace(0.0, control.duration, n_tau + 1)
    z_mid = (np.arange(n_z) + 0.5) / n_z
    retarded = tau_faces[:, np.newaxis] - control.kappa * z_mid[np.newaxis, :]
    energy = np.diff(control.intensity_integral(retarded), axis=0)
    magnitude = np.sqrt(np.clip(energy, 0.0, None) / h_tau)
    centre = np.clip(0.5 * (retarded[:-1] + retarded[1:]), 0.0, control.duration)
    return gamma * magnitude * np.exp(1j * np.angle(control.value_at(centre)))


def _warn_if_coarse(control: ControlField, n_tau: int) -> None:
    if control.gamma == 0.0:
        return
    tau = np.linspace(0.0, control.duration, n_tau + 1)
    step = float(np.max(np.abs(np.diff(control.value_at(tau)))))
    if step > MAX_CONTROL_STEP:
        logger.warning(f"Control changes by up to {step:.2f} per time step; refine n_tau (currently {n_tau})")


def _march(
    g: NDArray[np.complex128],
    a_in: NDArray[np.complex128],
    b_in: NDArray[np.complex128],
    h_tau: float,
    h_z: float,
    process: Process,
    store_fields: bool,
) -> tuple[NDArray, NDArray, NDArray | None, NDArray | None]:
    """Advance anti-diagonal wavefronts across the mesh for a batch of boundary data.

    Args:
        g: Cell couplings (nτ, nz)
        a_in: Input face A, shape (nτ,) or (nτ, batch)
        b_in: Input face B, shape (nz,) or (nz, batch)
        h_tau: τ step
        h_z: z step
        process: "memory" or "stokes"
        store_fields: Keep the full A and B arrays

    Returns:
        Tuple (A(τ, L), B(T, z), A field or None, B field or None)
    """
    n_tau, n_z = g.shape
    p = 0.5 * h_z * g
    if process == "memory":
        q = 0.5 * h_tau * np.conj(g)
        pq = (p * q).real
        gain = (1.0 - pq) / (1.0 + pq)
        inv = 1.0 / (1.0 + pq)
    else:
        q = 0.5 * h_tau * g
        pq = 0.25 * h_tau * h_z * np.abs(g) ** 2
        if np.any(pq >= 1.0):
            raise DomainError("Mesh too coarse for the Stokes gain: reduce the step sizes", {"max_cell_gain": float(pq.max())})
        gain = (1.0 + pq) / (1.0 - pq)
        inv = 1.0 / (1.0 - pq)

    single = a_in.ndim == 1
    a_front = np.array(a_in, dtype=complex, copy=True).reshape(n_tau, -1)
    b_front = np.array(b_in, dtype=complex, copy=True).reshape(n_z, -1)
    a_field = b_field = None
    if store_fields:
        batch = a_front.shape[1]
        a_field = np.empty((n_tau, n_z + 1, batch), dtype=complex)
        b_field = np.empty((n_tau + 1, n_z, batch), dtype=complex)
        a_field[:, 0] = a_front
        b_field[0, :] = b_front

    for diagonal in range(n_tau + n_z - 1):
        k = np.arange(max(0, diagonal - n_z + 1), min(diagonal, n_tau - 1) + 1)
        m = diagonal - k
        a_old = a_front[k]
        b_old = b_front[m]
        gain_c = gain[k, m][:, np.newaxis]
        inv_c = inv[k, m][:, np.newaxis]
        p_c = p[k, m][:, np.newaxis]
        q_c = q[k, m][:, np.newaxis]
        if process == "memory":
            a_front[k] = gain_c * a_old + 2.0 * p_c * inv_c * b_old
            b_front[m] = gain_c * b_old - 2.0 * q_c * inv_c * a_old
        else:
            a_front[k] = gain_c * a_old + 2.0 * p_c * inv_c * np.conj(b_old)
            b_front[m] = gain_c * b_old + 2.0 * q_c * inv_c * np.conj(a_old)
        if store_fields:
            a_field[k, m + 1] = a_front[k]
            b_field[k + 1, m] = b_front[m]

    if not (np.all(np.isfinite(a_front)) and np.all(np.isfinite(b_front))):
        raise NumericalError(
            "Non-finite values in propagation",
            {"process": process, "n_tau": n_tau, "n_z": n_z, "max_coupling": float(np.max(np.abs(g)))},
        )
    if single:
        a_front, b_front = a_front[:, 0], b_front[:, 0]
        if store_fields:
            a_field, b_field = a_field[..., 0], b_field[..., 0]
    return a_front, b_front, a_field, b_field


def _propagate(control: ControlField, bc: BoundaryConditions, n_tau: int, n_z: int, process: Process) -> FieldSolution:
    _check_mesh(n_tau, n_z)
    if bc.a_in.shape[0] != n_tau or bc.b_in.shape[0] != n_z:
        raise DomainError(
            f"Boundary data do not match the mesh ({n_tau} τ cells, {n_z} z cells)",
            {"a_in": bc.a_in.shape, "b_in": bc.b_in.shape},
        )
    _warn_if_coarse(control, n_tau)
    g = cell_couplings(control, n_tau, n_z)
    _, _, a_field, b_field = _march(g, bc.a_in, bc.b_in, control.duration / n_tau, 1.0 / n_z, process, store_fields=True)
    logger.debug(f"Propagated {process} run on {n_tau}x{n_z} cells (C={control.c}, kappa={control.kappa})")
    return FieldSolution(a=a_field, b=b_field, duration=control.duration, process=process)


def propagate_direct(control: ControlField, bc: BoundaryConditions, n_tau: int, n_z: int) -> FieldSolution:
    """Integrate the memory equations for one set of boundary conditions.

    Args:
        control: Control envelope with its coupling and dispersivity
        bc: Input faces on the τ-cell and z-cell centres
        n_tau: Number of τ cells
        n_z: Number of z cells

    Returns:
        FieldSolution with both fields on the full mesh

    Raises:
        DomainError: On mesh/boundary mismatch
        NumericalError: If the march produces non-finite values
    """
    return _propagate(control, bc, n_tau, n_z, "memory")


def propagate_stokes(control: ControlField, bc: BoundaryConditions, n_tau: int, n_z: int) -> FieldSolution:
    """Integrate the Stokes-scattering equations, which couple amplitudes to conjugates.

    The update acts on the pair (amplitude, conjugate amplitude) of each field, which is the
    doubled real system written in complex form.

    Args:
        control: Control envelope with its coupling and dispersivity
        bc: Input faces on the τ-cell and z-cell centres
        n_tau: Number of τ cells
        n_z: Number of z cells

    Returns:
        FieldSolution with process "stokes"
    """
    return _propagate(control, bc, n_tau, n_z, "stokes")


@dataclass(frozen=True)
class PropagatorMatrices:
    """Green's blocks of the memory map U = [[ca, sa], [−sb, cb]] in flux-weighted form.

    Columns are responses to unit-flux impulses and rows are flux amplitudes, so U is unitary
    without extra weight factors.
    """

    ca: NDArray[np.complex128] = field(repr=False)
    sa: NDArray[np.complex128] = field(repr=False)
    sb: NDArray[np.complex128] = field(repr=False)
    cb: NDArray[np.complex128] = field(repr=False)
    h_tau: float = 1.0
    h_z: float = 1.0

    @property
    def u(self) -> NDArray[np.complex128]:
        """The assembled scattering matrix."""
        return np.block([[self.ca, self.sa], [-self.sb, self.cb]])

    def raw_blocks(self) -> tuple[NDArray, NDArray, NDArray, NDArray]:
        """Blocks as maps between plain samples (no flux weights)."""
        ratio = np.sqrt(self.h_z / self.h_tau)
        return self.ca, self.sa * ratio, self.sb / ratio, self.cb


@dataclass(frozen=True)
class StokesMatrices:
    """Linear and antilinear blocks of the Stokes map X = C·X0 + S·X0*, flux-weighted.

    C = diag(ca, cb) and S = [[0, sa], [−sb, 0]].
    """

    ca: NDArray[np.complex128] = field(repr=False)
    sa: NDArray[np.complex128] = field(repr=False)
    sb: NDArray[np.complex128] = field(repr=False)
    cb: NDArray[np.complex128] = field(repr=False)

    @property
    def c_blocks(self) -> tuple[NDArray, NDArray]:
        """(C_A, C_B)."""
        return self.ca, self.cb

    @property
    def s_blocks(self) -> tuple[NDArray, NDArray]:
        """(S_A, S_B)."""
        return self.sa, self.sb


def _impulses(n_tau: int, n_z: int, h_tau: float, h_z: float, columns: slice) -> BoundaryConditions:
    """Unit-flux impulses for the selected columns of the stacked (A, B) input."""
    size = n_tau + n_z
    eye = np.eye(size)[:, columns]
    scale = np.concatenate([np.full(n_tau, 1.0 / np.sqrt(h_tau)), np.full(n_z, 1.0 / np.sqrt(h_z))])
    block = eye * scale[:, np.newaxis]
    return BoundaryConditions(a_in=block[:n_tau], b_in=block[n_tau:])


def _response(g: NDArray, bc: BoundaryConditions, h_tau: float, h_z: float, process: Process) -> NDArray[np.complex128]:
    """Flux-weighted outputs stacked as (A(τ, L), B(T, z)) for a batch of inputs."""
    a_out, b_out, _, _ = _march(g, bc.a_in, bc.b_in, h_tau, h_z, process, store_fields=False)
    return np.concatenate([np.sqrt(h_tau) * a_out, np.sqrt(h_z) * b_out])


def _split_memory(response: NDArray, n_tau: int, h_tau: float, h_z: float) -> PropagatorMatrices:
    return PropagatorMatrices(
        ca=response[:n_tau, :n_tau],
        sa=response[:n_tau, n_tau:],
        sb=-response[n_tau:, :n_tau],
        cb=response[n_tau:, n_tau:],
        h_tau=h_tau,
        h_z=h_z,
    )


def greens_matrices(control: ControlField, n_tau: int, n_z: int) -> PropagatorMatrices:
    """Extract the four Green's blocks by propagating unit impulses on every boundary sample.

    All nτ + nz impulses are marched together as one batch.

    Args:
        control: Control envelope
        n_tau: Number of τ cells
        n_z: Number of z cells

    Returns:
        PropagatorMatrices in flux-weighted form
    """
    _check_mesh(n_tau, n_z)
    h_tau, h_z = control.duration / n_tau, 1.0 / n_z
    g = cell_couplings(control, n_tau, n_z)
    response = _response(g, _impulses(n_tau, n_z, h_tau, h_z, slice(None)), h_tau, h_z, "memory")
    return _split_memory(response, n_tau, h_tau, h_z)


def stokes_matrices(control: ControlField, n_tau: int, n_z: int) -> StokesMatrices:
    """Extract the Stokes blocks from two impulse batches, real (e) and imaginary (i·e).

    With f the R-linear map, C·e = (f(e) − i·f(ie))/2 and S·e = (f(e) + i·f(ie))/2.
    """
    _check_mesh(n_tau, n_z)
    h_tau, h_z = control.duration / n_tau, 1.0 / n_z
    g = cell_couplings(control, n_tau, n_z)
    real = _impulses(n_tau, n_z, h_tau, h_z, slice(None))
    imaginary = BoundaryConditions(a_in=1j * real.a_in, b_in=1j * real.b_in)
    f_real = _response(g, real, h_tau, h_z, "stokes")
    f_imag = _response(g, imaginary, h_tau, h_z, "stokes")
    linear = 0.5 * (f_real - 1j * f_imag)
    antilinear = 0.5 * (f_real + 1j * f_imag)
    return StokesMatrices(
        ca=linear[:n_tau, :n_tau],
        cb=linear[n_tau:, n_tau:],
        sa=antilinear[:n_tau, n_tau:],
        sb=-antilinear[n_tau:, :n_tau],
    )


def check_unitarity(m: PropagatorMatrices) -> float:
    """Max-norm residual of the normal (UᴴU = I) and antinormal (UUᴴ = I) conditions.

    Their diagonal blocks are the four flux-conservation identities, e.g.
    caᴴca + sbᴴsb = I and ca·caᴴ + sa·saᴴ = I.

    Raises:
        DomainError: If the blocks do not assemble into a square matrix
    """
    n_a, n_b = m.ca.shape[0], m.cb.shape[0]
    shapes_ok = m.ca.shape == (n_a, n_a) and m.cb.shape == (n_b, n_b) and m.sa.shape == (n_a, n_b) and m.sb.shape == (n_b, n_a)
    if not shapes_ok:
        raise DomainError("Propagator blocks have inconsistent shapes", {"ca": m.ca.shape, "sa": m.sa.shape, "sb": m.sb.shape, "cb": m.cb.shape})
    u = m.u
    eye = np.eye(n_a + n_b)
    normal = np.max(np.abs(u.conj().T @ u - eye))
    antinormal = np.max(np.abs(u @ u.conj().T - eye))
    return float(max(normal, antinormal))


def check_symplectic(c_blocks: tuple[ArrayLike, ArrayLike], s_blocks: tuple[ArrayLike, ArrayLike]) -> float:
    """Max-norm residual of the Stokes flux-difference conditions.

    With Z = diag(I, −I), C = diag(C_A, C_B) and S = [[0, S_A], [−S_B, 0]]:

        CᴴZC + SᵀZS* = Z        CᴴZS + SᵀZC* = 0        (normal)
        CZCᴴ + SZSᴴ = Z         CZSᵀ + SZCᵀ = 0         (antinormal)

    Args:
        c_blocks: (C_A, C_B)
        s_blocks: (S_A, S_B)

    Returns:
        Largest entry of any residual matrix

    Raises:
        DomainError: On dimension mismatch
    """
    ca, cb = (np.asarray(block, dtype=complex) for block in c_blocks)
    sa, sb = (np.asarray(block, dtype=complex) for block in s_blocks)
    n_a, n_b = ca.shape[0], cb.shape[0]
    if ca.shape != (n_a, n_a) or cb.shape != (n_b, n_b) or sa.shape != (n_a, n_b) or sb.shape != (n_b, n_a):
        raise DomainError("Stokes blocks have inconsistent shapes", {"ca": ca.shape, "sa": sa.shape, "sb": sb.shape, "cb": cb.shape})

    zero_ab = np.zeros((n_a, n_b), dtype=complex)
    zero_ba = np.zeros((n_b, n_a), dtype=complex)
    c = np.block([[ca, zero_ab], [zero_ba, cb]])
    s = np.block([[np.zeros((n_a, n_a), dtype=complex), sa], [-sb, np.zeros((n_b, n_b), dtype=complex)]])
    z = np.diag(np.concatenate([np.ones(n_a), -np.ones(n_b)]))

    residuals = (
        c.conj().T @ z @ c + s.T @ z @ s.conj() - z,
        c.conj().T @ z @ s + s.T @ z @ c.conj(),
        c @ z @ c.conj().T + s @ z @ s.conj().T - z,
        c @ z @ s.T + s @ z @ c.T,
    )
    return float(max(np.max(np.abs(r)) for r in residuals))


def field_table(solution: FieldSolution) -> Table:
    """Both fields at the cell centres as tau,z,re_A,im_A,re_B,im_B."""
    tau, z, a_c, b_c = solution.cell_centered()
    tt, zz = np.meshgrid(tau, z, indexing="ij")
    rows = np.column_stack([tt.ravel(), zz.ravel(), a_c.real.ravel(), a_c.imag.ravel(), b_c.real.ravel(), b_c.imag.ravel()])
    return Table(["tau", "z", "re_A", "im_A", "re_B", "im_B"], rows.tolist())
