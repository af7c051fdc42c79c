"""End-to-end acceptance checks.

One test per shipped guarantee, each printing a single
``[criterion NN] name: PASS/FAIL`` line (run with ``-s`` to see them
all).  Tolerances are part of the guarantee and are asserted as stated,
not loosened to make a check pass.
"""

import math
from statistics import NormalDist

import numpy as np

from relbell import (
    DEFAULT_CONFIG,
    TSIRELSON_BOUND,
    CorrelatedGaussian,
    InterceptResend,
    ParticleKinematics,
    ProtocolConfig,
    Sharp,
    bell_average_mc,
    bell_average_sharp,
    commutator_norm,
    correlator_integrand,
    correlator_mc,
    kernel_from_beta,
    momentum_for_beta,
    run_protocol,
)
from relbell.cli import main


def record(num: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def gully(beta: float) -> float:
    eps = math.sqrt(1.0 - beta * beta)
    return -math.sqrt(2.0) * (eps + 1.0) / math.sqrt(1.0 - beta * beta / 2.0)


def test_criterion_01_rest_frame_maximum():
    value = bell_average_sharp(DEFAULT_CONFIG, (0.0, 0.0, 0.0))
    error = abs(value + TSIRELSON_BOUND)
    record(1, "rest-frame maximum -2*sqrt(2)", error < 1e-12, f"|err| = {error:.3g}")


def test_criterion_02_suppression_limit_band():
    value = abs(bell_average_sharp(DEFAULT_CONFIG, (0.9999, 0.0, 0.0)))
    record(
        2,
        "suppression band at beta = 0.9999",
        2.0 < value < 2.01,
        f"|c| = {value!r}",
    )


def test_criterion_03_gully_closed_form():
    betas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]
    worst = max(
        abs(bell_average_sharp(DEFAULT_CONFIG, (b, 0.0, 0.0)) - gully(b))
        for b in betas
    )
    record(3, "gully curve closed form", worst < 1e-10, f"max err = {worst:.3g}")


def test_criterion_04_single_correlation_formula():
    a_dir = (0.5, 0.5, math.sqrt(0.5))
    b_dir = (-0.5, -0.5, math.sqrt(0.5))
    worst = 0.0
    for beta in np.linspace(0.0, 0.99, 100):
        kin = ParticleKinematics.from_beta((0.0, 0.0, float(beta)))
        got = correlator_integrand(a_dir, b_dir, kin, kin)
        worst = max(worst, abs(got - (-beta * beta / (2.0 - beta * beta))))
    record(4, "tilted perpendicular-axes formula", worst < 1e-12, f"max err = {worst:.3g}")


def test_criterion_05_perpendicular_motion_immunity():
    worst = max(
        abs(abs(bell_average_sharp(DEFAULT_CONFIG, (0.0, 0.0, b))) - TSIRELSON_BOUND)
        for b in (0.0, 0.5, 0.9, 0.999)
    )
    record(5, "perpendicular motion keeps 2*sqrt(2)", worst < 1e-9, f"max err = {worst:.3g}")


def test_criterion_06_same_axis_anticorrelation():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10_000):
        a_dir = rng.standard_normal(3)
        a_dir /= np.linalg.norm(a_dir)
        beta = rng.uniform(0.0, 0.999) * (lambda v: v / np.linalg.norm(v))(
            rng.standard_normal(3)
        )
        kin = ParticleKinematics.from_beta(beta, mass=rng.uniform(0.1, 5.0))
        worst = max(worst, abs(correlator_integrand(a_dir, a_dir, kin, kin) + 1.0))
    record(6, "same-axis anti-correlation is exact", worst < 1e-12, f"max err = {worst:.3g}")


def test_criterion_07_monte_carlo_tracks_closed_form():
    mean = momentum_for_beta((0.9, 0.0, 0.0))
    sigma = 0.01 * math.sqrt(sum(c * c for c in mean))
    dist = CorrelatedGaussian(mean, sigma)
    target = gully(0.9)
    hits = 0
    for seed in range(100):
        est = bell_average_mc(DEFAULT_CONFIG, dist, 100_000, seed=seed)
        if abs(est.value - target) <= 3.0 * est.standard_error:
            hits += 1
    record(7, "MC within 3 sigma of closed form", hits >= 97, f"{hits}/100 seeds")


def test_criterion_08_tsirelson_sweep():
    rng = np.random.default_rng(8)
    n = 100_000

    def units(k):
        v = rng.standard_normal((k, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    axes = [units(n) for _ in range(4)]
    beta1 = rng.uniform(0.0, 0.9999, (n, 1)) * units(n)
    beta2 = rng.uniform(0.0, 0.9999, (n, 1)) * units(n)
    c = (
        kernel_from_beta(axes[0], axes[2], beta1, beta2)
        + kernel_from_beta(axes[0], axes[3], beta1, beta2)
        + kernel_from_beta(axes[1], axes[2], beta1, beta2)
        - kernel_from_beta(axes[1], axes[3], beta1, beta2)
    )
    peak = float(np.max(np.abs(c)))
    record(8, "Tsirelson bound over random scan", peak <= TSIRELSON_BOUND + 1e-9,
           f"max |c| = {peak!r}")


def test_criterion_09_false_alarm_rates():
    hits = 0
    for seed in range(100):
        transcript = run_protocol(
            ProtocolConfig(
                pair_count=100_000,
                distribution=Sharp.from_beta((0.9, 0.0, 0.0)),
                seed=seed,
                significance=0.01,
            )
        )
        if (
            transcript.bell_naive.verdict == "eavesdropper"
            and transcript.bell_corrected.verdict == "clean"
        ):
            hits += 1
    record(9, "honest fast beam: naive flags, corrected clears", hits >= 95,
           f"{hits}/100 seeds")


def test_criterion_10_true_alarm():
    transcript = run_protocol(
        ProtocolConfig(
            pair_count=100_000,
            distribution=Sharp((0.0, 0.0, 0.0)),
            seed=0,
            eve=InterceptResend(attack_probability=1.0),
        )
    )
    result = transcript.bell_corrected
    upper = abs(result.c_hat) + NormalDist().inv_cdf(0.99) * result.standard_error
    oracle_gap = abs(abs(result.c_hat) - math.sqrt(2.0))
    ok = (
        result.verdict == "eavesdropper"
        and upper < 2.0
        and oracle_gap <= 3.0 * result.standard_error
    )
    record(10, "full intercept-resend is flagged", ok,
           f"|c| = {abs(result.c_hat):.4f}, 99% upper = {upper:.4f}, "
           f"oracle gap = {oracle_gap:.4f} vs 3 sigma = {3 * result.standard_error:.4f}")


def test_criterion_11_sifted_key_agreement():
    worst = 0.0
    for beta in (0.0, 0.9, 0.99):
        transcript = run_protocol(
            ProtocolConfig(
                pair_count=10_000,
                distribution=Sharp.from_beta((beta, 0.0, 0.0)),
                seed=11,
            )
        )
        worst = max(worst, transcript.key_disagreement_rate())
    record(11, "sifted keys agree exactly", worst == 0.0, f"max disagreement = {worst}")


def test_criterion_12_commutator_collapse():
    rest = commutator_norm((1, 0, 0), (0, 1, 0), ParticleKinematics.at_rest())
    fast = commutator_norm(
        (1, 0, 0), (0, 1, 0), ParticleKinematics.from_beta((0.0, 0.0, 0.999))
    )
    ratio = fast / rest
    record(12, "spin commutator collapses at high speed", ratio < 0.05,
           f"ratio = {ratio:.4f}")


def test_criterion_13_determinism(tmp_path, capsys):
    argv = [
        "protocol", "--pairs", "2000", "--seed", "42", "--beta", "0.9,0,0",
    ]
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    for path in paths:
        assert main([*argv, "--out", str(path)]) == 0
    capsys.readouterr()
    transcripts_match = paths[0].read_bytes() == paths[1].read_bytes()

    dist = CorrelatedGaussian.from_beta((0.9, 0.0, 0.0), sigma=0.05)
    single = correlator_mc((1, 0, 0), (0, 1, 0), dist, 20_000, seed=5, workers=1)
    pooled = correlator_mc((1, 0, 0), (0, 1, 0), dist, 20_000, seed=5, workers=4)
    mc_match = single == pooled

    with capsys.disabled():
        record(13, "byte-identical reruns, worker-count invariance",
               transcripts_match and mc_match,
               f"transcripts {'==' if transcripts_match else '!='}, "
               f"MC {'==' if mc_match else '!='}")
