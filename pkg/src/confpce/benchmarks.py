"""Benchmark functions, input boxes, and seeded experimental-design sampling.

Four deterministic test functions with uniformly distributed inputs:

* ``meromorphic``: 1 / (1 + 0.5 x) on [-1, 1] (1 input).
* ``otl_circuit``: midpoint voltage of an output transformerless push-pull
  circuit (6 inputs).
* ``piston``: cycle time of a piston moving within a cylinder (7 inputs).
* ``wing_weight``: weight of a light aircraft wing (10 inputs).

Sampling uses numpy's PCG64 generator seeded through a SeedSequence whose
entropy is ``[crc32(benchmark name), stream id, *seed]`` with stream ids
train=0, test=1, so train and test draws are independent streams and a seed
may itself be a tuple (the experiment harness passes (degree, oversampling,
seed index) so that changing one grid axis never shifts another cell's data).
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import InputSpec, build_total_degree_set, to_reference
from .pce import Dataset

_STREAM_IDS = {"train": 0, "test": 1}


@dataclass(frozen=True)
class Benchmark:
    """A ground-truth function together with its input box.

    Attributes:
        name: Registry key.
        input_spec: Box of the uniformly distributed inputs.
        fn: Vectorized evaluator mapping an (n, N) array to (n,) outputs.
        param_names: Input labels, for auditing the parameter tables.
        size_rule: "quadratic" sizes designs as C (P+1)^2 (univariate rule),
            "linear" as C K (multivariate rule).
        degree_grid: Polynomial degrees the reference experiments sweep.
    """

    name: str
    input_spec: InputSpec
    fn: Callable[[np.ndarray], np.ndarray]
    param_names: tuple[str, ...]
    size_rule: str
    degree_grid: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.input_spec.dim


def _meromorphic(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + 0.5 * x[:, 0])


def _otl_circuit(x: np.ndarray) -> np.ndarray:
    rb1, rb2, rf, rc1, rc2, beta = (x[:, i] for i in range(6))
    vb1 = 12.0 * rb2 / (rb1 + rb2)
    denom = beta * (rc2 + 9.0) + rf
    return (
        (vb1 + 0.74) * beta * (rc2 + 9.0) / denom
        + 11.35 * rf / denom
        + 0.74 * rf * beta * (rc2 + 9.0) / (denom * rc1)
    )


def _piston(x: np.ndarray) -> np.ndarray:
    weight, area, v0, spring, p0, t_amb, t_gas = (x[:, i] for i in range(7))
    a = p0 * area + 19.62 * weight - spring * v0 / area
    root_arg = a**2 + 4.0 * spring * (p0 * v0 / t_gas) * t_amb
    assert np.all(root_arg > 0.0), "square-root argument must stay positive inside the box"
    v = area / (2.0 * spring) * (np.sqrt(root_arg) - a)
    return 2.0 * np.pi * np.sqrt(weight / (spring + area**2 * (p0 * v0 / t_gas) * (t_gas / v**2)))


def _wing_weight(x: np.ndarray) -> np.ndarray:
    s_w, w_fw, aspect, sweep_deg, q, taper, t_c, n_z, w_dg, w_p = (x[:, i] for i in range(10))
    # Table gives the quarter-chord sweep in degrees; the cosine wants radians.
    sweep = np.radians(sweep_deg)
    return (
        0.036
        * s_w**0.758
        * w_fw**0.0035
        * (aspect / np.cos(sweep) ** 2) ** 0.6
        * q**0.006
        * taper**0.04
        * (100.0 * t_c / np.cos(sweep)) ** (-0.3)
        * (n_z * w_dg) ** 0.49
        + s_w * w_p
    )


_REGISTRY: dict[str, Benchmark] = {}


def register_benchmark(benchmark: Benchmark) -> None:
    """Adds a benchmark to the registry (e.g. synthetic targets in tests)."""
    if benchmark.name in _REGISTRY:
        raise ValueError(f"benchmark {benchmark.name!r} already registered")
    if benchmark.size_rule not in ("quadratic", "linear"):
        raise ValueError(f"size_rule must be 'quadratic' or 'linear', got {benchmark.size_rule!r}")
    _REGISTRY[benchmark.name] = benchmark


def unregister_benchmark(name: str) -> None:
    _REGISTRY.pop(name, None)


def get_benchmark(name: str) -> Benchmark:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; known: {', '.join(sorted(_REGISTRY))}"
        ) from None


def benchmark_names() -> list[str]:
    return sorted(_REGISTRY)


register_benchmark(
    Benchmark(
        name="meromorphic",
        input_spec=InputSpec(ranges=((-1.0, 1.0),)),
        fn=_meromorphic,
        param_names=("x",),
        size_rule="quadratic",
        degree_grid=(2, 3),
    )
)
register_benchmark(
    Benchmark(
        name="otl_circuit",
        input_spec=InputSpec(
            ranges=(
                (50.0, 150.0),   # R_b1 [kOhm]
                (25.0, 70.0),    # R_b2 [kOhm]
                (0.5, 30.0),     # R_f  [kOhm]
                (1.2, 2.5),      # R_c1 [kOhm]
                (0.25, 1.2),     # R_c2 [kOhm]
                (50.0, 300.0),   # beta [A]
            )
        ),
        fn=_otl_circuit,
        param_names=("R_b1", "R_b2", "R_f", "R_c1", "R_c2", "beta"),
        size_rule="linear",
        degree_grid=(1, 2, 3),
    )
)
register_benchmark(
    Benchmark(
        name="piston",
        input_spec=InputSpec(
            ranges=(
                (30.0, 60.0),         # piston weight [kg]
                (0.005, 0.02),        # piston surface area [m^2]
                (0.002, 0.01),        # initial gas volume [m^3]
                (1000.0, 5000.0),     # spring coefficient [N/m]
                (90000.0, 110000.0),  # atmospheric pressure [N/m^2]
                (290.0, 296.0),       # ambient temperature [K]
                (340.0, 360.0),       # filling gas temperature [K]
            )
        ),
        fn=_piston,
        param_names=("M", "S", "V_0", "k", "P_0", "T_a", "T_0"),
        size_rule="linear",
        degree_grid=(2, 3, 4),
    )
)
register_benchmark(
    Benchmark(
        name="wing_weight",
        input_spec=InputSpec(
            ranges=(
                (150.0, 200.0),    # wing area [ft^2]
                (220.0, 300.0),    # wing fuel weight [lb]
                (6.0, 10.0),       # aspect ratio
                (-10.0, 10.0),     # quarter-chord sweep [deg]
                (16.0, 45.0),      # dynamic pressure at cruise [lb/ft^2]
                (0.5, 1.0),        # taper ratio
                (0.08, 0.18),      # thickness-to-chord ratio
                (2.5, 6.0),        # ultimate load factor
                (1700.0, 2500.0),  # flight design gross weight [lb]
                (0.025, 0.08),     # paint weight [lb/ft^2]
            )
        ),
        fn=_wing_weight,
        param_names=("S_w", "W_fw", "A", "Lambda", "q", "lambda", "t_c", "N_z", "W_dg", "W_p"),
        size_rule="linear",
        degree_grid=(1, 2),
    )
)


def evaluate(name: str, x: np.ndarray):
    """Evaluates a benchmark at a point (N,) or batch (n, N).

    Raises:
        DomainError: If any coordinate lies outside the benchmark's box.
    """
    bench = get_benchmark(name)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    # Reuse the reference-map tolerance rule as the box membership check.
    to_reference(pts, bench.input_spec)
    values = bench.fn(pts)
    return float(values[0]) if single else values


def _seed_entropy(name: str, seed, stream: str) -> list[int]:
    if stream not in _STREAM_IDS:
        raise ValueError(f"stream must be one of {sorted(_STREAM_IDS)}, got {stream!r}")
    parts = seed if isinstance(seed, (tuple, list)) else (seed,)
    return [zlib.crc32(name.encode()), _STREAM_IDS[stream], *(int(p) for p in parts)]


def sample_design(name: str, m: int, seed, stream: str = "train") -> Dataset:
    """Draws m i.i.d. uniform points in the box, paired with exact outputs.

    Deterministic per (name, m, seed, stream): the PCG64 generator is seeded
    from [crc32(name), stream id, *seed], so the same arguments always return
    bitwise-identical datasets and train/test streams never overlap. `seed`
    may be an int or a tuple of ints.
    """
    if m < 1:
        raise ValueError(f"design size must be >= 1, got {m}")
    bench = get_benchmark(name)
    rng = np.random.default_rng(np.random.SeedSequence(_seed_entropy(name, seed, stream)))
    inputs = rng.uniform(bench.input_spec.lower(), bench.input_spec.upper(), size=(m, bench.dim))
    return Dataset(inputs=inputs, outputs=bench.fn(inputs))


def design_size(name: str, degree: int, oversampling: int) -> int:
    """Experimental-design size for a degree/oversampling combination.

    Univariate rule (meromorphic): M = C (P+1)^2, required for a well
    conditioned one-dimensional least-squares problem. Multivariate rule:
    M = C K with K the total-degree basis size.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if oversampling < 1:
        raise ValueError(f"oversampling must be >= 1, got {oversampling}")
    bench = get_benchmark(name)
    if bench.size_rule == "quadratic":
        return oversampling * (degree + 1) ** 2
    return oversampling * len(build_total_degree_set(bench.dim, degree))


def dataset_to_csv(data: Dataset, path_or_buffer) -> None:
    """Writes `x1,...,xN,y` rows with shortest round-trip decimals."""
    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        n = data.inputs.shape[1]
        writer.writerow([f"x{i + 1}" for i in range(n)] + ["y"])
        for row, y in zip(data.inputs, data.outputs):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])

    if isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__"):
        with open(path_or_buffer, "w", newline="") as fh:
            _write(fh)
    else:
        _write(path_or_buffer)


def dataset_from_csv(path_or_buffer) -> Dataset:
    """Reads a dataset written by :func:`dataset_to_csv`.

    Raises:
        ValueError: On a malformed header or non-numeric/ragged rows.
    """
    if isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__"):
        with open(path_or_buffer, newline="") as fh:
            return dataset_from_csv(fh)
    reader = csv.reader(path_or_buffer)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV: expected a header row") from None
    n = len(header) - 1
    expected = [f"x{i + 1}" for i in range(n)] + ["y"]
    if n < 1 or [h.strip() for h in header] != expected:
        raise ValueError(f"malformed header {header!r}; expected x1,...,xN,y")
    inputs, outputs = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != n + 1:
            raise ValueError(f"line {lineno}: expected {n + 1} fields, got {len(row)}")
        try:
            values = [float(v) for v in row]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {row!r}") from None
        inputs.append(values[:-1])
        outputs.append(values[-1])
    if not inputs:
        raise ValueError("CSV contains a header but no data rows")
    return Dataset(inputs=np.asarray(inputs), outputs=np.asarray(outputs))
