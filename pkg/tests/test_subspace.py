import numpy as np
import pytest

from sph import LdaModel, PcaModel, fit_lda, fit_pca, load_model, project, save_model


class TestFitPca:
    def test_two_points_single_component(self):
        x = np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 1.0]])
        model = fit_pca(x, 1)
        direction = np.array([2.0, 2.0, 1.0]) / 3.0
        assert np.allclose(np.abs(model.components @ direction), 1.0)

    def test_single_active_axis(self):
        x = np.zeros((6, 4))
        x[:, 2] = [-3, -2, -1, 1, 2, 3]
        model = fit_pca(x, 1)
        assert np.allclose(np.abs(model.components[0]), [0, 0, 1, 0])

    def test_variances_match_dense_eigensolver_oracle(self, rng):
        x = rng.normal(size=(20, 50))
        model = fit_pca(x, 5)
        # independent oracle: dense eigendecomposition of the sample covariance
        cov = np.cov(x, rowvar=False, ddof=1)
        top = np.sort(np.linalg.eigvalsh(cov))[::-1][:5]
        assert np.allclose(model.eigenvalues, top, rtol=1e-8, atol=1e-10)
        projected = project(model, x)
        assert np.allclose(projected.var(axis=0, ddof=1), top, rtol=1e-8, atol=1e-10)

    def test_components_orthonormal(self, rng):
        model = fit_pca(rng.normal(size=(15, 40)), 8)
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(8)).max() <= 1e-8

    def test_eigenvalues_descending_nonnegative(self, rng):
        model = fit_pca(rng.normal(size=(30, 10)), 9)
        assert (np.diff(model.eigenvalues) <= 1e-12).all()
        assert (model.eigenvalues >= 0).all()

    def test_reconstruction_error_equals_discarded_eigenvalues(self, rng):
        x = rng.normal(size=(25, 12))
        n = x.shape[0]
        full = fit_pca(x, 12)  # d = dims < n - 1 keeps every eigenvalue
        model = fit_pca(x, 4)
        centered = x - model.mean
        recon = project(model, x) @ model.components
        residual = ((centered - recon) ** 2).sum()
        discarded = full.eigenvalues[4:].sum() * (n - 1)
        assert abs(residual - discarded) <= 1e-6 * max(discarded, 1.0)

    def test_projected_covariance_diagonal(self, rng):
        x = rng.normal(size=(40, 15))
        model = fit_pca(x, 10)
        cov = np.cov(project(model, x), rowvar=False, ddof=1)
        off_diag = np.abs(cov - np.diag(np.diag(cov))).sum()
        assert off_diag <= 1e-6 * np.trace(cov)

    def test_degenerate_identical_samples(self, caplog):
        x = np.tile([1.0, 2.0, 3.0], (5, 1))
        with caplog.at_level("WARNING", logger="sph.subspace"):
            model = fit_pca(x, 2)
        assert (model.eigenvalues == 0).all()
        assert any("zero-variance" in r.message for r in caplog.records)

    def test_d_out_of_range(self, rng):
        x = rng.normal(size=(5, 10))
        for bad in (0, 5, 11):
            with pytest.raises(ValueError, match="out of range"):
                fit_pca(x, bad)

    def test_sign_convention_reproducible(self, rng):
        x = rng.normal(size=(12, 6))
        a, b = fit_pca(x, 3), fit_pca(x.copy(), 3)
        assert np.array_equal(a.components, b.components)
        for row in a.components:
            assert row[np.abs(row).argmax()] > 0


class TestProject:
    def test_mean_maps_to_zero(self, rng):
        model = fit_pca(rng.normal(size=(10, 6)), 3)
        assert np.allclose(project(model, model.mean), 0.0)

    def test_full_rank_projection_preserves_distances(self, rng):
        x = rng.normal(size=(20, 5))
        model = fit_pca(x, 5)  # d = dims: orthonormal basis of the full space
        z = project(model, x)
        d_x = np.linalg.norm(x[:, None] - x[None, :], axis=-1)
        d_z = np.linalg.norm(z[:, None] - z[None, :], axis=-1)
        assert np.abs(d_x - d_z).max() <= 1e-8

    def test_batch_equals_per_sample(self, rng):
        x = rng.normal(size=(8, 7))
        model = fit_pca(x, 3)
        batch = project(model, x)
        rows = np.array([project(model, row) for row in x])
        assert np.allclose(batch, rows, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        model = fit_pca(rng.normal(size=(8, 7)), 3)
        with pytest.raises(ValueError, match="expected 7-dim"):
            project(model, np.zeros(6))


class TestFitLda:
    def test_separated_blobs_project_apart(self, rng):
        a = rng.normal(size=(30, 2)) * 0.5 + np.array([0.0, 0.0])
        b = rng.normal(size=(30, 2)) * 0.5 + np.array([10.0, 10.0])
        x = np.vstack([a, b])
        labels = np.array([0] * 30 + [1] * 30)
        model = fit_lda(x, labels, 1)
        z = project(model, x)
        za, zb = z[:30, 0], z[30:, 0]
        pooled = np.sqrt((za.var() + zb.var()) / 2)
        assert abs(za.mean() - zb.mean()) > 5 * pooled

    def test_output_dims_capped_by_class_count(self, rng):
        x = rng.normal(size=(30, 20))
        labels = np.repeat(np.arange(5), 6)
        model = fit_lda(x, labels)
        assert model.output_dims == 4
        with pytest.raises(ValueError, match="out of range"):
            fit_lda(x, labels, 5)

    def test_single_class_rejected(self, rng):
        with pytest.raises(ValueError, match="two classes"):
            fit_lda(rng.normal(size=(6, 4)), np.zeros(6, dtype=int))

    def test_one_sample_per_class_rejected(self, rng):
        x = rng.normal(size=(5, 4))
        with pytest.raises(ValueError, match="single sample"):
            fit_lda(x, np.arange(5))

    def test_mirrored_classes_align_with_mean_difference(self):
        # within-class deviations +-c*e_i make the within scatter exactly
        # isotropic, so the discriminant is the mean-difference axis itself
        deviations = 0.2 * np.array(
            [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
        )
        offset = np.array([3.0, 1.0, 2.0])
        x = np.vstack([offset + deviations, -offset + deviations])
        labels = np.array([0] * 6 + [1] * 6)
        model = fit_lda(x, labels, 1)
        # effective projection direction back in input space
        direction = model.lda_projection @ model.pca_stage.components
        direction = direction[0] / np.linalg.norm(direction)
        cos = abs(direction @ offset / np.linalg.norm(offset))
        assert cos > 0.99

    def test_zero_within_scatter_handled(self):
        # duplicated samples per class: within-class scatter is exactly zero
        x = np.array([[0.0, 0.0], [0.0, 0.0], [4.0, 4.0], [4.0, 4.0], [0.0, 9.0], [0.0, 9.0]])
        labels = np.array([0, 0, 1, 1, 2, 2])
        model = fit_lda(x, labels, 2)
        z = project(model, x)
        assert np.allclose(z[0], z[1])
        assert not np.allclose(z[0], z[2])


class TestSerialization:
    def test_pca_round_trip(self, tmp_path, rng):
        model = fit_pca(rng.normal(size=(10, 6)), 3)
        path = tmp_path / "model.bin"
        save_model(path, model)
        loaded = load_model(path)
        assert isinstance(loaded, PcaModel)
        assert np.array_equal(loaded.mean, model.mean)
        assert np.array_equal(loaded.components, model.components)
        assert np.array_equal(loaded.eigenvalues, model.eigenvalues)

    def test_lda_round_trip(self, tmp_path, rng):
        x = rng.normal(size=(24, 8))
        labels = np.repeat(np.arange(4), 6)
        model = fit_lda(x, labels)
        path = tmp_path / "lda.bin"
        save_model(path, model)
        loaded = load_model(path)
        assert isinstance(loaded, LdaModel)
        assert np.array_equal(project(loaded, x), project(model, x))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a model\nxxxx")
        with pytest.raises(ValueError, match="bad magic"):
            load_model(path)
