import struct

import numpy as np
import pytest

from isarff import formats
from isarff.align import AffineParams
from isarff.hough import LineFeature
from isarff.isar_sim import ComplexFrame, IntensityFrame


class TestComplexFrameFormat:
    def test_golden_bytes(self, tmp_path):
        pixels = np.array([[1 + 2j, 3 - 4j]], dtype=complex)
        frame = ComplexFrame(pixels, 0.03, 0.03, frame_index=7)
        path = tmp_path / "frame.cpx"
        formats.write_complex_frame(path, frame)
        expected = b"ISARC1"
        expected += struct.pack("<II", 1, 2)
        expected += struct.pack("<ffff", 1.0, 2.0, 3.0, -4.0)
        expected += struct.pack("<ffI", 0.03, 0.03, 7)
        assert path.read_bytes() == expected

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        pixels = (rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))).astype(np.complex64)
        frame = ComplexFrame(pixels.astype(complex), 0.0075, 0.0075, 3)
        path = tmp_path / "frame.cpx"
        formats.write_complex_frame(path, frame)
        loaded = formats.read_complex_frame(path)
        assert np.array_equal(loaded.pixels, pixels.astype(complex))
        assert loaded.frame_index == 3
        assert loaded.range_spacing == pytest.approx(0.0075)

    def test_magic_enforced(self, tmp_path):
        path = tmp_path / "bogus.cpx"
        path.write_bytes(b"NOTISA" + b"\x00" * 32)
        with pytest.raises(ValueError):
            formats.read_complex_frame(path)


class TestIntensityAndMaskFormats:
    def test_intensity_golden_bytes(self, tmp_path):
        frame = IntensityFrame(np.array([[-1.5, 0.0]]), 0.03, 0.03, 2, floor_db=-50.0)
        path = tmp_path / "frame.int"
        formats.write_intensity_frame(path, frame)
        expected = b"ISARI1" + struct.pack("<II", 1, 2)
        expected += struct.pack("<ff", -1.5, 0.0)
        expected += struct.pack("<ffI", 0.03, 0.03, 2)
        assert path.read_bytes() == expected

    def test_intensity_round_trip(self, tmp_path):
        pixels = np.linspace(-50, 0, 12).reshape(3, 4).astype(np.float32)
        frame = IntensityFrame(pixels.astype(float), 0.03, 0.03, 9)
        path = tmp_path / "frame.int"
        formats.write_intensity_frame(path, frame)
        loaded = formats.read_intensity_frame(path)
        assert np.array_equal(loaded.pixels, pixels.astype(float))
        assert loaded.frame_index == 9

    def test_gradient_magics(self, tmp_path):
        frame = IntensityFrame(np.zeros((2, 2)), 0.03, 0.03, 0)
        for magic in (formats.MAGIC_GRAD_MAG, formats.MAGIC_GRAD_DIR):
            path = tmp_path / magic.decode().lower()
            formats.write_intensity_frame(path, frame, magic)
            assert path.read_bytes()[:6] == magic
            formats.read_intensity_frame(path, magic)

    def test_mask_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        mask = rng.random((6, 5)) < 0.4
        path = tmp_path / "mask.bin"
        formats.write_mask(path, mask, (0.03, 0.03), 4)
        assert path.read_bytes()[:6] == b"MASKB1"
        assert np.array_equal(formats.read_mask(path), mask)


class TestFeatureMapFormat:
    def test_golden_bytes(self, tmp_path):
        grid = np.array([[0, 1], [2, 65535]], dtype=np.uint16)
        path = tmp_path / "map.bin"
        formats.write_feature_map(path, grid)
        expected = b"FMAP01" + struct.pack("<II", 2, 2) + struct.pack("<HHHH", 0, 1, 2, 65535)
        assert path.read_bytes() == expected
        assert np.array_equal(formats.read_feature_map(path), grid)


class TestCsvReports:
    def test_alignment_report(self, tmp_path):
        params = [AffineParams(), AffineParams(rotation=np.pi / 4, translation=(1.5, -2.0))]
        path = tmp_path / "alignment.csv"
        formats.write_alignment_report(path, params, ["reference", "ok"])
        lines = path.read_text().splitlines()
        assert lines[0] == "frame,theta_deg,cx,cy,dx,dy,sx_px,sy_px,status"
        assert lines[1].startswith("0,0,1,1,0,0,0,0,reference")
        assert lines[2].endswith("ok")
        assert "45" in lines[2]

    def test_feature_report_round_trip(self, tmp_path):
        features = [
            LineFeature(rho=4.0, theta=90.0, strength=12.5, segments=[(-10, 5), (8, 14)], frame_index=2),
            LineFeature(rho=-7.0, theta=0.0, strength=3.25, segments=[(-3, 9)], frame_index=5),
        ]
        path = tmp_path / "features.csv"
        formats.write_feature_report(path, features, (32, 32))
        lines = path.read_text().splitlines()
        assert lines[0] == (
            "frame,rho_px,theta_deg,strength,seg_start_x,seg_start_y,seg_end_x,seg_end_y"
        )
        assert len(lines) == 4  # one row per segment
        loaded = formats.read_feature_report(path, (32, 32))
        assert len(loaded) == 2
        assert loaded[0].rho == 4.0 and loaded[0].theta == 90.0
        assert loaded[0].frame_index == 2
        assert len(loaded[0].segments) == 2
        for (a0, a1), (b0, b1) in zip(loaded[0].segments, features[0].segments):
            assert a0 == pytest.approx(b0, abs=1e-6)
            assert a1 == pytest.approx(b1, abs=1e-6)

    def test_cluster_and_kinematics_reports(self, tmp_path):
        from isarff.cluster import FeatureCluster, ParamPoint

        features = [
            LineFeature(rho=4.0, theta=90.0, strength=1.0, segments=[(0, 5)], frame_index=0),
            LineFeature(rho=4.0, theta=90.0, strength=1.0, segments=[(0, 5)], frame_index=1),
            LineFeature(rho=30.0, theta=10.0, strength=1.0, segments=[(0, 5)], frame_index=0),
        ]
        cluster = FeatureCluster(id=1, members=[ParamPoint(0.1, 0.25, 0, 0), ParamPoint(0.1, 0.25, 1, 1)])
        noise = [ParamPoint(0.65, 0.03, 0, 2)]
        path = tmp_path / "clusters.csv"
        formats.write_cluster_report(path, [cluster], noise, features)
        lines = path.read_text().splitlines()
        assert lines[0] == "cluster_id,frame,rho_px,theta_deg,strength,is_noise"
        assert lines[1] == "1,0,4,90,1,0"
        assert lines[3] == "0,0,30,10,1,1"
        members = formats.read_cluster_report(path)
        assert set(members) == {1}
        assert members[1] == [(0, 4.0, 90.0), (1, 4.0, 90.0)]

        kin_path = tmp_path / "kinematics.csv"
        formats.write_kinematics_report(kin_path, [(1, 20, 0.999, 80.7, "shadow_edge")])
        assert kin_path.read_text().splitlines()[1] == "1,20,0.999,80.7,shadow_edge"

    def test_cluster_report_keeps_seam_clusters_contiguous(self, tmp_path):
        # a feature track jittering across +/-180 must come back as one
        # numerically contiguous theta band, not two ends of the range
        from isarff.cluster import dbscan, extend_theta, resolve_duplicates, scale_params

        features = [
            LineFeature(
                rho=5.0 + 0.8 * t,
                theta=179.5 if t % 2 == 0 else -179.5,
                strength=1.0,
                segments=[(-10, 10)],
                frame_index=t,
            )
            for t in range(20)
        ]
        points = extend_theta(scale_params(features, 46.0))
        clusters = resolve_duplicates(dbscan(points, eps=0.05, mu=4), 4)
        assert len(clusters) == 1
        path = tmp_path / "clusters.csv"
        formats.write_cluster_report(path, clusters, [], features)
        members = formats.read_cluster_report(path)
        thetas = [theta for _, _, theta in members[clusters[0].id]]
        assert max(thetas) - min(thetas) <= 2.0
