"""Iterative reconstruction algorithms for the padded-convolution model.

Every solver follows the same three-step lifecycle::

    rec = new_reconstruction(psf, SolverConfig(algorithm="admm", n_iter=100))
    rec.set_data(measurement)
    estimate = rec.apply()

All solvers minimize 0.5 * ||G x - y||^2 plus optional priors, where G is
the pad/convolve/crop forward operator. They differ as follows:

* ``gd``: projected gradient descent; the non-negativity projection is
  applied inside every step.
* ``nesterov``: accelerated gradient descent with the t-sequence momentum;
  gradients are taken at the extrapolated point and iterates are NOT
  projected inside the step (only the returned image is clipped), which is
  the only difference from ``fista``.
* ``fista``: same momentum, gradient at the extrapolated point, projection
  inside the step.
* ``apgd``: FISTA momentum with a proximal step; ``tv_weight`` acts as the
  weight of an elementwise l1 sparsity term (its prox composes exactly with
  the non-negativity projection). For total variation use ``admm``.
* ``admm``: three-way splitting with an anisotropic total-variation prior
  (weight ``tv_weight``) and a non-negativity constraint. Internally the
  iterate lives on the doubled grid where both the convolution and the
  circular-difference Gram matrices are frequency-diagonal; a support
  constraint confines the estimate to the scene block of that grid, which
  makes the split problem equivalent to the H x W problem the other
  solvers minimize.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .convolve import FFT_MODES, plan
from .image import as_image
from .prox import soft_threshold, tv_adjoint, tv_forward

__all__ = [
    "ALGORITHMS",
    "SolverConfig",
    "ProximableTerm",
    "Objective",
    "Reconstruction",
    "GradientDescent",
    "NesterovGradientDescent",
    "FISTA",
    "APGD",
    "ADMM",
    "new_reconstruction",
]

ALGORITHMS = ("gd", "nesterov", "fista", "apgd", "admm")

#: Default penalty and prior weights for ADMM. These are package defaults
#: chosen for [0, 1]-scaled data, exposed so callers can override them.
ADMM_DEFAULTS = {"tv_weight": 1e-4, "mu1": 1e-6, "mu2": 1e-5, "mu3": 4e-5}


@dataclass
class SolverConfig:
    """Algorithm selection and hyperparameters shared by all solvers.

    ``tv_weight`` and the ``mu*`` penalties default to None, meaning "use
    the algorithm's defaults": ADMM resolves them to ``ADMM_DEFAULTS``;
    every other algorithm resolves ``tv_weight`` to 0 and ignores ``mu*``.
    ``step_size`` accepts a positive float or "auto" (1 / lipschitz).
    ``callback_every`` of 0 disables callbacks.
    """

    algorithm: str = "admm"
    n_iter: int = 100
    step_size: float | str = "auto"
    tv_weight: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    mu3: float | None = None
    nonneg: bool = True
    callback_every: int = 1
    fft_mode: str = "real"


@dataclass(frozen=True)
class ProximableTerm:
    """A regularizer with a value function and a proximal map."""

    name: str
    value: object
    prox: object


L1_TERM = ProximableTerm("l1", lambda x: float(np.abs(x).sum()), soft_threshold)
TV_TERM = ProximableTerm(
    "tv",
    lambda x: float(np.abs(tv_forward(x)).sum()),
    soft_threshold,  # applied to the stacked differences, not to x itself
)


@dataclass
class Objective:
    """Composite objective: smooth fidelity + weighted proximable terms.

    ``data_fidelity_value`` / ``data_fidelity_gradient`` evaluate
    0.5 * ||G x - y||^2 and its gradient. ``regularizers`` is a list of
    (weight, ProximableTerm) pairs; ``nonneg`` marks the constraint.
    """

    data_fidelity_value: object
    data_fidelity_gradient: object
    regularizers: list = field(default_factory=list)
    nonneg: bool = True


def _resolve_config(config, algorithm):
    cfg = dataclasses.replace(config, algorithm=algorithm)
    if cfg.n_iter < 1:
        raise ValueError(f"n_iter must be positive, got {cfg.n_iter}")
    if cfg.callback_every < 0:
        raise ValueError(f"callback_every must be >= 0, got {cfg.callback_every}")
    if cfg.fft_mode not in FFT_MODES:
        raise ValueError(f"fft_mode must be one of {FFT_MODES}, got {cfg.fft_mode!r}")
    if cfg.tv_weight is None:
        cfg.tv_weight = ADMM_DEFAULTS["tv_weight"] if algorithm == "admm" else 0.0
    if cfg.tv_weight < 0:
        raise ValueError(f"tv_weight must be >= 0, got {cfg.tv_weight}")
    if algorithm == "admm":
        for name in ("mu1", "mu2", "mu3"):
            val = getattr(cfg, name)
            if val is None:
                val = ADMM_DEFAULTS[name]
                setattr(cfg, name, val)
            if val <= 0:
                raise ValueError(f"{name} must be positive, got {val}")
    if cfg.step_size != "auto":
        cfg.step_size = float(cfg.step_size)
        if cfg.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {cfg.step_size}")
    return cfg


class Reconstruction:
    """Base lifecycle shared by all solvers; not useful directly.

    A Reconstruction owns mutable state and must be driven by one thread at
    a time; separate instances may run in parallel and may share one
    operator since the operator itself is immutable.
    """

    algorithm = "base"

    def __init__(self, psf, config=None):
        if config is None:
            config = SolverConfig(algorithm=self.algorithm)
        self.config = _resolve_config(config, self.algorithm)
        self._validate_config()
        self.psf = psf
        self.op = plan(psf, fft_mode=self.config.fft_mode)
        if self.config.step_size == "auto":
            self.step_size = 1.0 / self.op.lipschitz
        else:
            self.step_size = self.config.step_size
        self._y = None
        self.iteration = 0
        self.objective_history = []
        self.objective = None

    # -- hooks ----------------------------------------------------------
    def _validate_config(self):
        pass

    def _reset(self):
        raise NotImplementedError

    def _step(self):
        raise NotImplementedError

    def _scene_estimate(self):
        raise NotImplementedError

    def _objective_value(self):
        raise NotImplementedError

    def _regularizer_terms(self):
        return []

    # -- lifecycle ------------------------------------------------------
    def set_data(self, y):
        """Install the measurement and reset all iteration state."""
        y = as_image(y)
        if y.shape != self.op.psf_shape:
            raise ValueError(
                f"data shape {y.shape} does not match PSF shape {self.op.psf_shape}"
            )
        self._y = y.copy()
        op = self.op

        def fid_value(x):
            r = op.apply(x) - self._y
            return 0.5 * float(np.sum(r * r))

        def fid_grad(x):
            return op.adjoint(op.apply(x) - self._y)

        self.objective = Objective(
            data_fidelity_value=fid_value,
            data_fidelity_gradient=fid_grad,
            regularizers=self._regularizer_terms(),
            nonneg=self.config.nonneg,
        )
        self.iteration = 0
        self._reset()
        self.objective_history = [self._objective_value()]

    def _require_data(self):
        if self._y is None:
            raise RuntimeError("set_data must be called before iterating")

    def step(self):
        """Advance one iteration and record the objective value."""
        self._require_data()
        self._step()
        self.iteration += 1
        self.objective_history.append(self._objective_value())

    def apply(self, n_iter=None, callback=None):
        """Run ``n_iter`` steps (default from the config) and return the
        estimate clipped to be non-negative.

        ``callback(iteration, image, objective)`` fires every
        ``callback_every`` iterations; the image argument is a read-only
        snapshot of the current iterate.
        """
        self._require_data()
        n = self.config.n_iter if n_iter is None else int(n_iter)
        if n < 0:
            raise ValueError(f"n_iter must be >= 0, got {n}")
        every = self.config.callback_every
        for _ in range(n):
            self.step()
            if callback is not None and every > 0 and self.iteration % every == 0:
                snap = self._scene_estimate()
                snap.flags.writeable = False
                callback(self.iteration, snap, self.objective_history[-1])
        return np.maximum(self._scene_estimate(), 0.0)

    @property
    def iterate(self):
        """Copy of the current scene estimate (H x W grid, unclipped)."""
        return self._scene_estimate()


class GradientDescent(Reconstruction):
    """Projected gradient descent on the data-fidelity term.

    Keeps the current residual G x - y cached, so the recorded objective
    value costs nothing extra; the cached gradient equals
    ``objective.data_fidelity_gradient`` at the iterate.
    """

    algorithm = "gd"

    def _validate_config(self):
        if (self.config.tv_weight or 0) > 0:
            raise ValueError(
                "gd has no proximal stage for tv_weight > 0; "
                "use apgd (elementwise l1) or admm (total variation)"
            )

    def _reset(self):
        self._x = np.zeros(self.op.psf_shape)
        self._resid = -self._y.copy()

    def _step(self):
        grad = self.op.adjoint(self._resid)
        self._x = self._x - self.step_size * grad
        if self.config.nonneg:
            np.maximum(self._x, 0.0, out=self._x)
        self._resid = self.op.apply(self._x) - self._y

    def _scene_estimate(self):
        return self._x.copy()

    def _objective_value(self):
        return 0.5 * float(np.sum(self._resid * self._resid))


class _Accelerated(Reconstruction):
    """Shared momentum machinery for nesterov, fista, and apgd."""

    def _reset(self):
        self._x = np.zeros(self.op.psf_shape)
        self._v = self._x.copy()
        self._t = 1.0

    def _momentum_scale(self):
        return 1.0

    def _shrink(self, candidate):
        raise NotImplementedError

    def _step(self):
        grad = self.objective.data_fidelity_gradient(self._v)
        x_new = self._shrink(self._v - self.step_size * grad)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * self._t**2))
        beta = self._momentum_scale() * (self._t - 1.0) / t_new
        self._v = x_new + beta * (x_new - self._x)
        self._x = x_new
        self._t = t_new

    def _scene_estimate(self):
        return self._x.copy()

    def _objective_value(self):
        value = self.objective.data_fidelity_value(self._x)
        for weight, term in self.objective.regularizers:
            value += weight * term.value(self._x)
        return value


class NesterovGradientDescent(_Accelerated):
    """Accelerated gradient descent, iterates left unprojected.

    The gradient is evaluated at the extrapolated point and no projection
    happens inside the step; only the image returned by ``apply`` is
    clipped. ``damping`` scales the momentum coefficient (1 keeps the
    plain t-sequence, 0 degenerates to unprojected gradient descent).
    """

    algorithm = "nesterov"

    def __init__(self, psf, config=None, damping=1.0):
        if not 0.0 <= damping <= 1.0:
            raise ValueError(f"damping must be in [0, 1], got {damping}")
        self._damping = float(damping)
        super().__init__(psf, config)

    def _validate_config(self):
        if (self.config.tv_weight or 0) > 0:
            raise ValueError(
                "nesterov has no proximal stage for tv_weight > 0; "
                "use apgd (elementwise l1) or admm (total variation)"
            )

    def _momentum_scale(self):
        return self._damping

    def _shrink(self, candidate):
        return candidate


class FISTA(_Accelerated):
    """Accelerated projected gradient descent.

    Identical to nesterov except that the non-negativity projection is
    applied inside every update, keeping all iterates feasible.
    """

    algorithm = "fista"

    def _validate_config(self):
        if (self.config.tv_weight or 0) > 0:
            raise ValueError(
                "fista has no proximal stage for tv_weight > 0; "
                "use apgd (elementwise l1) or admm (total variation)"
            )

    def _shrink(self, candidate):
        if self.config.nonneg:
            return np.maximum(candidate, 0.0)
        return candidate


class APGD(_Accelerated):
    """Accelerated proximal gradient descent.

    ``tv_weight`` weights an elementwise l1 sparsity term whose prox (soft
    threshold) composes exactly with the non-negativity projection. The
    step handles exactly one proximable term; total variation needs the
    splitting in ``admm``.
    """

    algorithm = "apgd"

    def _regularizer_terms(self):
        if self.config.tv_weight > 0:
            return [(self.config.tv_weight, L1_TERM)]
        return []

    def _shrink(self, candidate):
        scaled = self.step_size * self.config.tv_weight
        if scaled > 0:
            candidate = soft_threshold(candidate, scaled)
        if self.config.nonneg:
            return np.maximum(candidate, 0.0)
        return candidate


class ADMM(Reconstruction):
    """Three-way split ADMM with TV prior and non-negativity.

    Splitting: u = M x (circular convolution on the doubled grid),
    z = Psi x (circular differences), w = x (support and sign
    constraints). All x-update denominators are frequency-diagonal and
    precomputed at construction. The w-update always projects onto the
    scene block of the doubled grid; without that support constraint the
    padded problem is underdetermined and the iterates settle on a
    minimizer that does not match the H x W least-squares solution.
    """

    algorithm = "admm"

    def __init__(self, psf, config=None):
        super().__init__(psf, config)
        cfg = self.config
        c, h, w = self.op.psf_shape
        ph, pw = self.op.padded_shape
        self._S = self.op.spectrum
        # Squared spectral magnitudes of the circular difference operator.
        k1 = np.arange(ph).reshape(-1, 1)
        k2 = np.arange(self._S.shape[-1])
        psi2 = (2.0 - 2.0 * np.cos(2.0 * np.pi * k1 / ph)) + (
            2.0 - 2.0 * np.cos(2.0 * np.pi * k2 / pw)
        )
        self._x_denom = cfg.mu1 * np.abs(self._S) ** 2 + cfg.mu2 * psi2 + cfg.mu3
        r0, c0 = self.op.window
        window_mask = np.zeros((ph, pw))
        window_mask[r0 : r0 + h, c0 : c0 + w] = 1.0
        self._window_mask = window_mask
        self._u_denom = window_mask + cfg.mu1
        scene_mask = np.zeros((ph, pw))
        scene_mask[:h, :w] = 1.0
        self._scene_mask = scene_mask

    def _regularizer_terms(self):
        if self.config.tv_weight > 0:
            return [(self.config.tv_weight, TV_TERM)]
        return []

    def _fft(self, a):
        if self.op.fft_mode == "real":
            return np.fft.rfft2(a, s=self.op.padded_shape)
        return np.fft.fft2(a, s=self.op.padded_shape)

    def _ifft(self, a):
        if self.op.fft_mode == "real":
            return np.fft.irfft2(a, s=self.op.padded_shape)
        return np.fft.ifft2(a, s=self.op.padded_shape).real

    def _reset(self):
        c, h, w = self.op.psf_shape
        ph, pw = self.op.padded_shape
        shape = (c, ph, pw)
        r0, c0 = self.op.window
        self._x = np.zeros(shape)
        self._Qx = np.zeros(shape)  # M x, refreshed after each x-update
        self._u = np.zeros(shape)
        self._z = np.zeros((2, *shape))
        self._w = np.zeros(shape)
        self._eta = np.zeros(shape)
        self._rho = np.zeros((2, *shape))
        self._nu = np.zeros(shape)
        cty = np.zeros(shape)
        cty[:, r0 : r0 + h, c0 : c0 + w] = self._y
        self._Cty = cty

    def _step(self):
        cfg = self.config
        mu1, mu2, mu3 = cfg.mu1, cfg.mu2, cfg.mu3
        # u: data-fit block, closed form through the crop/pad pair.
        self._u = (self._Cty + mu1 * self._Qx + self._eta) / self._u_denom
        # z: TV block, soft threshold in the difference domain.
        self._z = soft_threshold(
            tv_forward(self._x) + self._rho / mu2, cfg.tv_weight / mu2
        )
        # w: constraint block, scene support plus optional sign clamp.
        w = (self._x + self._nu / mu3) * self._scene_mask
        if cfg.nonneg:
            np.maximum(w, 0.0, out=w)
        self._w = w
        rhs = (
            self._ifft(self._fft(mu1 * self._u - self._eta) * np.conj(self._S))
            + tv_adjoint(mu2 * self._z - self._rho)
            + (mu3 * w - self._nu)
        )
        xhat = self._fft(rhs) / self._x_denom
        self._x = self._ifft(xhat)
        self._Qx = self._ifft(xhat * self._S)
        self._eta += mu1 * (self._Qx - self._u)
        self._rho += mu2 * (tv_forward(self._x) - self._z)
        self._nu += mu3 * (self._x - self._w)

    def _scene_estimate(self):
        _, h, w = self.op.psf_shape
        return self._x[:, :h, :w].copy()

    def _objective_value(self):
        # The cached M x makes the fidelity term free of extra transforms.
        _, h, w = self.op.psf_shape
        r0, c0 = self.op.window
        resid = self._Qx[:, r0 : r0 + h, c0 : c0 + w] - self._y
        value = 0.5 * float(np.sum(resid * resid))
        if self.config.tv_weight > 0:
            value += self.config.tv_weight * float(np.abs(tv_forward(self._x)).sum())
        return value


_CLASSES = {
    "gd": GradientDescent,
    "nesterov": NesterovGradientDescent,
    "fista": FISTA,
    "apgd": APGD,
    "admm": ADMM,
}


def new_reconstruction(psf, config):
    """Instantiate the solver named by ``config.algorithm``."""
    name = str(config.algorithm).lower()
    if name not in _CLASSES:
        raise ValueError(
            f"unknown algorithm {config.algorithm!r}; "
            f"valid choices: {', '.join(ALGORITHMS)}"
        )
    return _CLASSES[name](psf, config)
