"""Smoke test for the compo_motor_py extension module.

Build the module and put it on the path first, for example:

    cargo build --release -p compo-motor-py
    cp target/release/libcompo_motor_py.so python/compo_motor_py.so
    python3 python/smoke_test.py
"""

import json
import math

import compo_motor_py as cm


def close(a, b, tol=1e-5):
    return abs(a - b) <= tol


def main():
    w = cm.gating_normalize([0.0, 0.0, 5.0], 2, 4.0)
    assert w == [0.5, 0.5, 0.0], w

    out = cm.compose([0.25, 0.75, 0.0], [[1.0, 2.0], [3.0, -1.0], None])
    assert close(out[0], 2.5) and close(out[1], -0.25), out

    amps, offs = cm.table_decode([0.0, 2.0], [0.0, 10.0])
    assert close(amps[1], 0.88080) and close(offs[1], math.pi / 4), (amps, offs)

    assert close(cm.eval_target("T1", 0.0), 0.5)
    assert close(cm.reward(1.0, 0.5, "left"), 10 * math.log(2) + 10)

    net = cm.Rnn()
    assert net.param_count == 56
    loss, trace = net.episode("B1")
    assert close(loss, 50.0, 1e-9) and len(trace) == 200
    one = cm.Rnn(n_neurons=1, n_inputs=1, output_indices=[0], params=[1.0, 1.0])
    outs = one.rollout([[1.0], [0.0]])
    assert close(outs[0][0], 0.76159) and close(outs[1][0], 0.64201), outs

    ep = cm.snake_episode([0.5] * 8, [0.0] * 8, "straight", seed=1, episode_steps=20)
    assert ep["steps"] == 20 and ep["aborted"] is None and ep["d"] > 0.0, ep

    res = cm.minimize(lambda x: (x[0] - 3.0) ** 2, 1, seed=2, max_epochs=300, target_cost=1e-8)
    assert abs(res["best_genotype"][0] - 3.0) < 1e-3, res["best_genotype"]

    try:
        cm.gating_normalize([0.0], 2)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for k beyond the coefficients")

    try:
        cm.validate_genome(json.dumps({"format_version": 1}))
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for an incomplete genome")

    print("smoke test passed")


if __name__ == "__main__":
    main()
