"""Monte Carlo sampling, detection thinning, and frame rendering."""

import numpy as np
import pytest
from scipy import stats

from twophoton.errors import InvalidParameterError
from twophoton.optics import SpatialGrid
from twophoton.patterns import JointPattern2D
from twophoton.sensor import (
    FULL_SCALE,
    CameraModel,
    FrameSimulator,
    PhotonEvent,
    apply_detection,
    render_frame,
    sample_pairs,
)


def make_pdf(n=16, delta=None):
    grid = SpatialGrid(-1e-3, 1e-3, n)
    v = np.ones((n, n))
    if delta is not None:
        v = np.zeros((n, n))
        v[delta] = 1.0
    v = v / (v.sum() * grid.spacing**2)
    return JointPattern2D(grid, v, "coincidence", unit_sum=True)


class TestCameraModel:
    def test_defaults(self):
        cam = CameraModel()
        assert cam.width == cam.height == 512
        assert cam.pitch == pytest.approx(24e-6)
        assert cam.quantum_efficiency == 0.5
        assert cam.strip_height == 32

    def test_pixel_grid_centered(self):
        cam = CameraModel()
        g = cam.pixel_grid()
        assert g.n == 512
        assert g.spacing == pytest.approx(24e-6)
        assert g.x_min == pytest.approx(-g.x_max)

    def test_position_to_col_roundtrip(self):
        cam = CameraModel()
        g = cam.pixel_grid()
        cols = cam.position_to_col(g.positions)
        assert np.array_equal(cols, np.arange(512))

    def test_invalid_models(self):
        with pytest.raises(InvalidParameterError):
            CameraModel(quantum_efficiency=1.5)
        with pytest.raises(InvalidParameterError):
            CameraModel(patch_size=2)
        with pytest.raises(InvalidParameterError):
            CameraModel(strip_rows=(500, 520))
        with pytest.raises(InvalidParameterError):
            # threshold above the dimmest possible patch pixel
            CameraModel(threshold=0.5)


class TestSamplePairs:
    def test_delta_pdf_hits_one_cell(self):
        pdf = make_pdf(delta=(3, 7))
        rng = np.random.default_rng(0)
        pairs = sample_pairs(pdf, 500, rng)
        x = pdf.grid.positions
        dx = pdf.grid.spacing
        assert np.all(np.abs(pairs[:, 0] - x[3]) <= dx / 2 + 1e-15)
        assert np.all(np.abs(pairs[:, 1] - x[7]) <= dx / 2 + 1e-15)

    def test_uniform_pdf_counts_within_3_sigma(self):
        n = 8
        pdf = make_pdf(n=n)
        rng = np.random.default_rng(1)
        samples = 100_000
        pairs = sample_pairs(pdf, samples, rng)
        edges = np.linspace(
            pdf.grid.x_min - pdf.grid.spacing / 2,
            pdf.grid.x_max + pdf.grid.spacing / 2,
            n + 1,
        )
        hist, *_ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges])
        p = 1 / n**2
        sigma = np.sqrt(samples * p * (1 - p))
        assert np.all(np.abs(hist - samples * p) < 3.6 * sigma)

    def test_swap_symmetry(self):
        # symmetric pdf: (x', x'') and (x'', x') histograms agree statistically
        n = 6
        pdf = make_pdf(n=n)
        rng = np.random.default_rng(2)
        pairs = sample_pairs(pdf, 100_000, rng)
        edges = np.linspace(pdf.grid.x_min, pdf.grid.x_max, 4)
        h1, *_ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges])
        h2, *_ = np.histogram2d(pairs[:, 1], pairs[:, 0], bins=[edges, edges])
        stat = np.sum((h1 - h2) ** 2 / (h1 + h2))
        assert stats.chi2.sf(stat, 9) > 1e-4

    def test_negative_pdf_rejected(self):
        grid = SpatialGrid(-1e-3, 1e-3, 4)
        v = np.full((4, 4), 1.0)
        v[0, 0] = -1.0
        pdf = JointPattern2D(grid, v, "coincidence")
        with pytest.raises(InvalidParameterError):
            sample_pairs(pdf, 10, np.random.default_rng(0))


class TestApplyDetection:
    def test_eta_one_keeps_all(self):
        pairs = np.random.default_rng(0).uniform(-1, 1, (50, 2))
        out = apply_detection(pairs, 1.0, np.random.default_rng(1))
        assert out.size == 100

    def test_eta_zero_drops_all(self):
        pairs = np.random.default_rng(0).uniform(-1, 1, (50, 2))
        out = apply_detection(pairs, 0.0, np.random.default_rng(1))
        assert out.size == 0

    def test_survival_fraction(self):
        rng = np.random.default_rng(3)
        pairs = rng.uniform(-1, 1, (20_000, 2))
        out = apply_detection(pairs, 0.5, rng)
        assert out.size == pytest.approx(20_000, rel=0.03)


class TestRenderFrame:
    def test_empty_frame(self):
        cam = CameraModel()
        frame = render_frame([], cam, np.random.default_rng(0))
        assert frame.shape == (512, 512)
        assert frame.max() == 0

    def test_single_event_peak_at_event_pixel(self):
        cam = CameraModel()
        rng = np.random.default_rng(4)
        frame = render_frame([PhotonEvent(100, 200)], cam, rng)
        r, c = np.unravel_index(np.argmax(frame), frame.shape)
        assert (r, c) == (100, 200)
        # full 3x3 patch above threshold
        patch = frame[99:102, 199:202]
        assert np.all(patch > cam.threshold_analog)
        # peak strictly dominates its neighbors
        assert np.sum(patch == patch.max()) == 1

    def test_edge_event_clipped(self):
        cam = CameraModel()
        frame = render_frame([PhotonEvent(0, 0)], cam, np.random.default_rng(5))
        assert frame[0, 0] == frame.max()
        assert np.count_nonzero(frame) == 4

    def test_out_of_bounds_event(self):
        cam = CameraModel()
        with pytest.raises(InvalidParameterError):
            render_frame([PhotonEvent(600, 0)], cam, np.random.default_rng(0))

    def test_dark_events_single_pixel(self):
        cam = CameraModel()
        frame = render_frame([], cam, np.random.default_rng(6), n_dark=5)
        assert 0 < np.count_nonzero(frame) <= 5
        assert frame[frame > 0].min() >= int(0.3 * FULL_SCALE)


class TestFrameSimulator:
    def make_sim(self, n_frames=200, mean_pairs=0.5, seed=42):
        return FrameSimulator(make_pdf(), CameraModel(), n_frames, mean_pairs, seed)

    def test_determinism(self):
        a, b = self.make_sim(), self.make_sim()
        for k in (0, 7, 199):
            assert np.array_equal(a.frame(k), b.frame(k))

    def test_frames_differ_across_indices(self):
        sim = self.make_sim(mean_pairs=3.0)
        assert not np.array_equal(sim.frame(0), sim.frame(1))

    def test_order_independence(self):
        sim = self.make_sim()
        late_first = sim.frame(50).copy()
        _ = [sim.frame(k) for k in range(10)]
        assert np.array_equal(sim.frame(50), late_first)

    def test_zero_mean_pairs_only_darks(self):
        sim = FrameSimulator(
            make_pdf(), CameraModel(dark_rate=0.0), 50, 0.0, seed=1
        )
        assert all(sim.frame(k).max() == 0 for k in range(50))

    def test_rows_inside_strip(self):
        sim = self.make_sim(mean_pairs=4.0)
        events, _, _ = sim.frame_events(0)
        assert events
        r0, r1 = sim.camera.strip_rows
        assert all(r0 <= e.row <= r1 for e in events)

    def test_is_blank_matches_rendered_frame(self):
        sim = self.make_sim(mean_pairs=0.2)
        for k in range(100):
            assert sim.is_blank(k) == (sim.frame(k).max() == 0)

    def test_write_roundtrip(self, tmp_path):
        from twophoton.frameio import FrameFileReader

        sim = self.make_sim(n_frames=20)
        path = tmp_path / "run.bifr"
        sim.write(path)
        reader = FrameFileReader(path)
        assert len(reader) == 20
        for k in (0, 13, 19):
            assert np.array_equal(reader.frame(k), sim.frame(k))

    def test_pair_survival_statistics(self):
        # eta = 0.5: a one-pair frame keeps both photons with probability 1/4
        sim = FrameSimulator(
            make_pdf(), CameraModel(dark_rate=0.0), 4000, 1e-9, seed=9
        )
        # force exactly one pair per frame by sampling events directly
        rng = np.random.default_rng(10)
        both = sum(
            apply_detection(np.ones((1, 2)), 0.5, rng).size == 2 for _ in range(4000)
        )
        assert both == pytest.approx(1000, abs=4 * np.sqrt(4000 * 0.25 * 0.75))
