import numpy as np
import pytest

from mpc3.ring import FixedPointCodec
from mpc3.simulator import simulate

CODEC = FixedPointCodec(16)
ULP = 2**-16


def run(program, **kwargs):
    return simulate(program, **kwargs)


def decode(out):
    return CODEC.decode_tensor(out)


class TestShareReveal:
    def test_roundtrip_exact_on_grid(self):
        vals = np.arange(-8.0, 8.0, 0.125)

        def program(prot):
            x = prot.share(0, vals if prot.me == 0 else None, shape=vals.shape)
            return prot.reveal(x)

        result = run(program)
        for out in result.outputs:
            np.testing.assert_array_equal(decode(out), vals)

    def test_each_party_can_deal(self):
        def program(prot):
            xs = prot.share_many([
                (owner, np.full((3,), float(owner)) if prot.me == owner else None,
                 (3,), True)
                for owner in range(3)
            ])
            return [decode(prot.reveal(x)) for x in xs]

        result = run(program)
        for owner in range(3):
            np.testing.assert_array_equal(result.outputs[0][owner], [owner] * 3)

    def test_reveal_to_single_party(self):
        def program(prot):
            x = prot.share(1, np.array([2.5]) if prot.me == 1 else None, shape=(1,))
            out = prot.reveal(x, to=2)
            return None if out is None else decode(out)

        result = run(program)
        assert result.outputs[0] is None and result.outputs[1] is None
        np.testing.assert_array_equal(result.outputs[2], [2.5])

    def test_share_public_agreement(self):
        def program(prot):
            x = prot.share_public(np.array([1.5, -2.0]))
            return decode(prot.reveal(x))

        result = run(program)
        np.testing.assert_array_equal(result.outputs[0], [1.5, -2.0])


class TestLinearOps:
    def test_add_sub_exact(self):
        a = np.array([1.25, -3.5, 100.0])
        b = np.array([0.75, 2.25, -50.5])

        def program(prot):
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            y = prot.share(1, b if prot.me == 1 else None, shape=b.shape)
            return [decode(prot.reveal(prot.add(x, y))),
                    decode(prot.reveal(prot.sub(x, y))),
                    decode(prot.reveal(prot.add(x, b))),
                    decode(prot.reveal(prot.sub(x, 1.0)))]

        outs = run(program).outputs[0]
        np.testing.assert_array_equal(outs[0], a + b)
        np.testing.assert_array_equal(outs[1], a - b)
        np.testing.assert_array_equal(outs[2], a + b)
        np.testing.assert_array_equal(outs[3], a - 1.0)

    def test_mul_public_int_exact(self):
        def program(prot):
            x = prot.share(0, np.array([1.5]) if prot.me == 0 else None, shape=(1,))
            return decode(prot.reveal(prot.mul_public(x, 3)))

        assert run(program).outputs[0][0] == 4.5

    def test_mul_public_float(self):
        def program(prot):
            x = prot.share(0, np.array([1.5]) if prot.me == 0 else None, shape=(1,))
            return decode(prot.reveal(prot.mul_public(x, 0.5)))

        assert run(program).outputs[0][0] == pytest.approx(0.75, abs=ULP)

    def test_lincomb_single_truncation(self):
        a = np.array([1.0, -2.0])
        b = np.array([0.5, 4.0])

        def program(prot):
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            y = prot.share(0, b if prot.me == 0 else None, shape=b.shape)
            z = prot.lincomb([(0.25, x), (-0.5, y)], const=np.array([1.0, 1.0]))
            return decode(prot.reveal(z))

        out = run(program).outputs[0]
        np.testing.assert_allclose(out, 0.25 * a - 0.5 * b + 1.0, atol=2 * ULP)

    def test_structural_ops(self):
        a = np.arange(6, dtype=np.float64).reshape(2, 3)

        def program(prot):
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            return [decode(prot.reveal(prot.transpose(x))),
                    decode(prot.reveal(prot.sum(x, axis=1))),
                    decode(prot.reveal(prot.take_rows(x, np.array([1, 0])))),
                    decode(prot.reveal(prot.reshape(x, (3, 2)))),
                    decode(prot.reveal(prot.concat([x, x], axis=0))),
                    decode(prot.reveal(prot.stack([x, x])))]

        outs = run(program).outputs[0]
        np.testing.assert_array_equal(outs[0], a.T)
        np.testing.assert_array_equal(outs[1], a.sum(axis=1))
        np.testing.assert_array_equal(outs[2], a[[1, 0]])
        np.testing.assert_array_equal(outs[3], a.reshape(3, 2))
        np.testing.assert_array_equal(outs[4], np.concatenate([a, a]))
        np.testing.assert_array_equal(outs[5], np.stack([a, a]))


class TestProducts:
    def test_mul_within_one_ulp(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(-50, 50, size=(64,))
        b = rng.uniform(-50, 50, size=(64,))

        def program(prot):
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            y = prot.share(1, b if prot.me == 1 else None, shape=b.shape)
            return decode(prot.reveal(prot.mul(x, y)))

        out = run(program).outputs[0]
        np.testing.assert_allclose(out, a * b, atol=2 * ULP + abs(a * b).max() * ULP)

    def test_matmul_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(-5, 5, size=(4, 6))
        b = rng.uniform(-5, 5, size=(6, 2))

        def program(prot):
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            y = prot.share(1, b if prot.me == 1 else None, shape=b.shape)
            return decode(prot.reveal(prot.matmul(x, y)))

        out = run(program).outputs[0]
        np.testing.assert_allclose(out, a @ b, atol=(a.shape[1] + 1) * ULP)

    def test_matmul_dim_mismatch(self):
        def program(prot):
            x = prot.share(0, np.zeros((2, 3)) if prot.me == 0 else None, shape=(2, 3))
            return prot.matmul(x, x)

        with pytest.raises(ValueError, match="matmul"):
            run(program)

    def test_unscaled_mul_no_truncation(self):
        """Integer (unscaled) products are exact and skip the rescale round."""
        def program(prot):
            x = prot.share(0, np.array([7.0]) if prot.me == 0 else None,
                           shape=(1,), is_scaled=False)
            y = prot.share(0, np.array([-3.0]) if prot.me == 0 else None,
                           shape=(1,), is_scaled=False)
            before = prot.stats.rounds
            z = prot.mul(x, y)
            mul_rounds = prot.stats.rounds - before
            return decode(prot.reveal(z)), mul_rounds

        out, rounds = run(program).outputs[0]
        assert out[0] == -21.0
        assert rounds == 1


class TestRounds:
    def test_round_accounting(self):
        """share = 1 round, reveal = 1, scaled mul = 2, truncate = 2."""
        marks = {}

        def program(prot):
            a = np.array([1.5, 2.5])
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            marks["share"] = prot.stats.rounds
            z = prot.mul(x, x)
            marks["mul"] = prot.stats.rounds
            prot.reveal(z)
            marks["reveal"] = prot.stats.rounds
            return marks.copy()

        m = run(program).outputs[0]
        assert m["share"] == 1
        assert m["mul"] - m["share"] == 2
        assert m["reveal"] - m["mul"] == 1

    def test_batched_mul_same_rounds_as_single(self):
        def program(n_pairs):
            def inner(prot):
                a = np.arange(4, dtype=np.float64)
                x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
                before = prot.stats.rounds
                prot.mul_many([(x, x)] * n_pairs)
                return prot.stats.rounds - before
            return inner

        assert run(program(1)).outputs[0] == run(program(8)).outputs[0]

    def test_identical_stats_across_parties(self):
        def program(prot):
            a = np.array([[1.0, 2.0]])
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            prot.reveal(prot.mul(x, x))
            return None

        result = run(program)
        rounds = [s.rounds for s in result.stats]
        assert rounds[0] == rounds[1] == rounds[2]


class TestReplicationConsistency:
    def test_assert_mode_clean_run(self):
        def program(prot):
            a = np.array([1.0, -2.0, 3.0])
            x = prot.share(0, a if prot.me == 0 else None, shape=a.shape)
            prot.reveal(prot.mul(x, x))
            return None

        run(program, assert_mode=True)  # raises IntegrityError on violation
