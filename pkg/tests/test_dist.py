import numpy as np
import pytest

from genbound.dist import SourceError, SourceSpec, default_px, default_pz, rng_for, sample


class TestSample:
    @pytest.mark.parametrize("kind", ["uniform_cube", "independent_beta"])
    def test_deterministic(self, kind):
        spec = SourceSpec(kind, 2, 7)
        assert np.array_equal(sample(spec, 3, 0), sample(spec, 3, 0))
        assert not np.array_equal(sample(spec, 3, 0), sample(spec, 3, 1))
        assert not np.array_equal(sample(spec, 3, 0), sample(spec.with_seed(8), 3, 0))

    @pytest.mark.parametrize("kind", ["uniform_cube", "independent_beta"])
    def test_domain(self, kind):
        X = sample(SourceSpec(kind, 4, 1), 20_000, 3)
        assert X.shape == (20_000, 4)
        assert X.min() >= 0.0 and X.max() <= 1.0

    def test_uniform_mean(self):
        X = sample(SourceSpec("uniform_cube", 3, 0), 100_000, 0)
        assert np.all(np.abs(X.mean(axis=0) - 0.5) <= 0.005)

    def test_beta_mean(self):
        # Beta(2, 5) has mean 2/7 and sd sqrt(10/392)
        X = sample(default_px(2), 100_000, 0)
        tol = 3 * np.sqrt(10 / 392) / np.sqrt(100_000)
        assert np.all(np.abs(X.mean(axis=0) - 2 / 7) <= tol)

    def test_defaults(self):
        assert default_px(3).kind == "independent_beta" and default_px(3).alpha == 2 and default_px(3).beta == 5
        assert default_pz(2).kind == "uniform_cube"

    def test_streams_uncorrelated(self):
        spec = SourceSpec("uniform_cube", 1, 0)
        a = sample(spec, 100_000, (13, 0, 0))[:, 0]
        b = sample(spec, 100_000, (13, 0, 1))[:, 0]
        c = sample(spec, 100_000, (17, 0, 0))[:, 0]
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.02
        assert abs(np.corrcoef(a, c)[0, 1]) < 0.02

    def test_prefix_independent_of_count(self):
        spec = SourceSpec("uniform_cube", 2, 4)
        assert np.array_equal(sample(spec, 10, 5)[:3], sample(spec, 3, 5))

    def test_rejects_bad_arguments(self):
        with pytest.raises(SourceError):
            sample(SourceSpec("uniform_cube", 1, 0), 0, 0)
        with pytest.raises(SourceError):
            SourceSpec("gaussian", 1, 0)
        with pytest.raises(SourceError):
            SourceSpec("fixed_dataset", 1, 0)
        with pytest.raises(SourceError):
            rng_for(0, (-1,))


class TestFixedDataset:
    def test_loads_and_resamples(self, tmp_path):
        f = tmp_path / "pts.txt"
        f.write_text("# two points\n0.1 0.2\n\n0.9 1.0\n")
        X = sample(SourceSpec("fixed_dataset", 2, 0, path=str(f)), 500, 0)
        rows = {tuple(r) for r in X}
        assert rows == {(0.1, 0.2), (0.9, 1.0)}

    @pytest.mark.parametrize(
        "text,match",
        [("0.1\n", "expected 2 values"), ("0.1 x\n", "not a list of reals"), ("0.1 1.5\n", r"\[0, 1\]"), ("# only\n", "no data")],
    )
    def test_malformed(self, tmp_path, text, match):
        f = tmp_path / f"bad{abs(hash(text))}.txt"
        f.write_text(text)
        with pytest.raises(SourceError, match=match) as exc:
            sample(SourceSpec("fixed_dataset", 2, 0, path=str(f)), 3, 0)
        assert str(f) in str(exc.value)

    def test_missing_path_named(self, tmp_path):
        missing = str(tmp_path / "nope.txt")
        with pytest.raises(SourceError, match="nope.txt"):
            sample(SourceSpec("fixed_dataset", 1, 0, path=missing), 3, 0)
