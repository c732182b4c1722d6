"""Why the action rule is a soft-max and not a greedy argmax.

The policy scores actions by the composite Q_r + Y * Q_g. A greedy rule is
discontinuous in those scores: two estimate vectors that differ by a hair can
disagree on the argmax and produce wildly different value predictions for the
individual reward and utility criteria. The soft-max rule is 2-alpha-Lipschitz,
so nearby estimates give nearby policies and nearby values, at the price of a
log(|A|)/alpha optimality gap. Both effects are shown numerically below.
"""

import numpy as np

from pdlsvi import softmax_policy


def greedy_values(q_r, q_g, y):
    a = int(np.argmax(q_r + y * q_g))
    return q_r[a], q_g[a]


def soft_values(q_r, q_g, y, alpha):
    pi = softmax_policy(q_r, q_g, y, alpha)
    return float(pi @ q_r), float(pi @ q_g)


def main():
    m, eps = 100.0, 0.01

    # adversarial pair: composite scores nearly tie, so a tiny perturbation
    # of the estimates flips the greedy action between the two extremes
    q_r = np.array([m, 1.0])
    q_g = np.array([1.0, m + eps / 2])
    y = 1.0
    q_r_p = np.array([m + eps / 2, 1.0 - eps / 2])
    q_g_p = np.array([1.0 + eps / 2, m])
    y_p = 1.0 - eps / 2

    vr_greedy, _ = greedy_values(q_r, q_g, y)
    vr_greedy_p, _ = greedy_values(q_r_p, q_g_p, y_p)
    print(f"estimate perturbation size: {eps}")
    print(f"greedy reward-value prediction: {vr_greedy:.3f} -> {vr_greedy_p:.3f} "
          f"(jump of {abs(vr_greedy - vr_greedy_p):.3f})")

    alpha = 1.0
    vr_soft, _ = soft_values(q_r, q_g, y, alpha)
    vr_soft_p, _ = soft_values(q_r_p, q_g_p, y_p, alpha)
    print(f"soft-max (alpha={alpha}) prediction: {vr_soft:.3f} -> {vr_soft_p:.3f} "
          f"(moves {abs(vr_soft - vr_soft_p):.3f})")

    # the Lipschitz property behind that stability, checked on random draws
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(2000):
        n = rng.integers(2, 8)
        alpha = rng.uniform(0.1, 20.0)
        z = rng.uniform(0, 10, size=n)
        dz = rng.normal(scale=0.3, size=n)
        pi = softmax_policy(z, np.zeros(n), 0.0, alpha)
        pi_p = softmax_policy(z + dz, np.zeros(n), 0.0, alpha)
        ratio = np.abs(pi - pi_p).sum() / (2 * alpha * np.abs(dz).max())
        worst = max(worst, ratio)
    print(f"\nworst |pi - pi'|_1 / (2 alpha |z - z'|_inf) over 2000 draws: "
          f"{worst:.4f}  (the inequality caps this at 1)")

    # the price of smoothness: the soft-max value lags the greedy maximum
    # by at most log(|A|) / alpha
    print("\ngreedy-vs-soft-max value gap against the log(|A|)/alpha cap:")
    z = np.array([3.0, 2.5, 1.0, 0.0])
    for alpha in (0.5, 2.0, 10.0, 100.0):
        pi = softmax_policy(z, np.zeros(4), 0.0, alpha)
        gap = z.max() - float(pi @ z)
        print(f"  alpha = {alpha:6.1f}: gap = {gap:.6f}   cap = {np.log(4) / alpha:.6f}")


if __name__ == "__main__":
    main()
