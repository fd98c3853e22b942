import numpy as np
import pytest

from vid2voxel import pipeline, sensor
from vid2voxel.rng import RngKey, StreamTag
from vid2voxel.types import ConfigError, DataError, DiscreteVoxel, InterpolatedVoxel


def small_plan(bins=5, voxels=40, stride=None):
    return pipeline.SlicePlan(bins_per_voxel=bins, voxels_per_sequence=voxels,
                              stride=stride)


def random_frames(n, height=6, width=7, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (n, height, width)).astype(np.uint8)


def quiet_policy(mode=pipeline.RANDOMIZED):
    # No noise or hot pixels: keeps policy tests deterministic per draw.
    ranges = sensor.ParamRanges(sigma_bg_range=(0.0, 0.0),
                                hot_pixel_fraction_range=(0.0, 0.0))
    return pipeline.ParamPolicy(mode=mode, ranges=ranges)


class TestPlanSlices:
    def test_exactly_one_window(self):
        assert pipeline.plan_slices(201, small_plan()) == [(0, 201)]

    def test_two_windows(self):
        assert pipeline.plan_slices(402, small_plan()) == [(0, 201), (201, 402)]

    def test_one_frame_short_yields_none(self):
        assert pipeline.plan_slices(200, small_plan()) == []

    def test_custom_stride_overlaps(self):
        plan = small_plan(bins=2, voxels=2, stride=2)  # window length 5
        assert pipeline.plan_slices(9, plan) == [(0, 5), (2, 7), (4, 9)]

    def test_manifest_sequence_count_matches(self):
        scenes = tuple(
            pipeline.SceneRecord(scene_id=f"s{i}", frame_count=n, width=4, height=4,
                                 frame_rate=30.0, source_bytes=0)
            for i, n in enumerate([201, 402, 200, 805]))
        manifest = pipeline.DatasetManifest(scenes=scenes)
        assert manifest.sequence_count(small_plan()) == 1 + 2 + 0 + 4


class TestBuildSample:
    def test_constant_window_all_zero_voxels(self):
        frames = np.full((11, 4, 4), 90, dtype=np.uint8)
        sample = pipeline.build_sample(
            frames, quiet_policy(), scene_id="s", window_start=0, epoch=0,
            global_seed=0, bins_per_voxel=5)
        assert sample.voxels.shape == (2, 5, 4, 4)
        assert not sample.voxels.any()
        assert sample.boundary_frames.shape == (3, 4, 4)

    def test_boundary_frames_are_every_bth(self):
        frames = random_frames(11)
        sample = pipeline.build_sample(
            frames, quiet_policy(), scene_id="s", window_start=0, epoch=0,
            global_seed=0, bins_per_voxel=5)
        assert np.array_equal(sample.boundary_frames, frames[::5])

    def test_randomized_policy_varies_with_epoch(self):
        frames = random_frames(11)
        kwargs = dict(scene_id="s", window_start=0, global_seed=0, bins_per_voxel=5)
        a = pipeline.build_sample(frames, quiet_policy(), epoch=1, **kwargs)
        b = pipeline.build_sample(frames, quiet_policy(), epoch=2, **kwargs)
        assert a.params.c_plus != b.params.c_plus
        assert not np.array_equal(a.voxels, b.voxels)
        assert np.array_equal(a.boundary_frames, b.boundary_frames)

    def test_fixed_policy_is_epoch_invariant(self):
        frames = random_frames(11)
        kwargs = dict(scene_id="s", window_start=0, global_seed=0, bins_per_voxel=5)
        a = pipeline.build_sample(frames, quiet_policy(pipeline.FIXED), epoch=1, **kwargs)
        b = pipeline.build_sample(frames, quiet_policy(pipeline.FIXED), epoch=2, **kwargs)
        assert a.params.c_plus == b.params.c_plus
        assert np.array_equal(a.voxels, b.voxels)

    def test_fixed_policy_epoch_invariant_with_noise_and_hot_pixels(self):
        frames = random_frames(11)
        ranges = sensor.ParamRanges(sigma_bg_range=(0.05, 0.1),
                                    hot_pixel_fraction_range=(0.05, 0.05))
        policy = pipeline.ParamPolicy(mode=pipeline.FIXED, ranges=ranges)
        kwargs = dict(scene_id="s", window_start=0, global_seed=3, bins_per_voxel=5)
        a = pipeline.build_sample(frames, policy, epoch=0, **kwargs)
        b = pipeline.build_sample(frames, policy, epoch=5, **kwargs)
        assert np.array_equal(a.voxels, b.voxels)

    def test_voxels_match_chained_direct_simulation(self):
        frames = random_frames(11)
        policy = quiet_policy()
        sample = pipeline.build_sample(
            frames, policy, scene_id="sc", window_start=0, epoch=0,
            global_seed=7, bins_per_voxel=5)
        params = pipeline.params_for_scene(policy, "sc", 0, (6, 7), 7)
        residual = sensor.init_residual(
            params, (6, 7), RngKey(global_seed=7, scene_id=pipeline.scene_hash("sc"),
                                   epoch=0, stream_tag=StreamTag.INIT, frame_index=0))
        whole, _ = sensor.v2v_voxel(frames, params, residual)
        assert np.array_equal(sample.voxels.reshape(10, 6, 7), whole.data)

    def test_degradation_draw_is_keyed(self):
        frames = random_frames(11)
        kwargs = dict(scene_id="s", window_start=0, epoch=0, global_seed=0,
                      bins_per_voxel=5, degrade_prob=1.0)
        a = pipeline.build_sample(frames, quiet_policy(), **kwargs)
        b = pipeline.build_sample(frames, quiet_policy(), **kwargs)
        assert np.array_equal(a.voxels, b.voxels)

    def test_rejects_partial_window(self):
        with pytest.raises(DataError):
            pipeline.build_sample(
                random_frames(10), quiet_policy(), scene_id="s", window_start=0,
                epoch=0, global_seed=0, bins_per_voxel=5)


class TestSampleCrop:
    def make_sample(self, height=10, width=12):
        frames = random_frames(5, height, width)
        return pipeline.build_sample(
            frames, quiet_policy(), scene_id="s", window_start=0, epoch=0,
            global_seed=0, bins_per_voxel=2)

    def crop_key(self, seed=0):
        return RngKey(global_seed=seed, scene_id=0, epoch=0,
                      stream_tag=StreamTag.CROP, frame_index=0)

    def test_full_size_identity(self):
        sample = self.make_sample()
        out = pipeline.sample_crop(sample, (10, 12), self.crop_key())
        assert np.array_equal(out.voxels, sample.voxels)

    def test_same_key_same_corner(self):
        sample = self.make_sample()
        a = pipeline.sample_crop(sample, 4, self.crop_key(1))
        b = pipeline.sample_crop(sample, 4, self.crop_key(1))
        assert np.array_equal(a.voxels, b.voxels)
        assert a.voxels.shape == (2, 2, 4, 4)
        assert a.boundary_frames.shape == (3, 4, 4)

    def test_corner_within_bounds(self):
        sample = self.make_sample(180, 596)
        for seed in range(5):
            out = pipeline.sample_crop(sample, 128, self.crop_key(seed))
            assert out.boundary_frames.shape == (3, 128, 128)

    def test_crop_too_large_rejected(self):
        with pytest.raises(ConfigError):
            pipeline.sample_crop(self.make_sample(), 64, self.crop_key())


class TestVoxelIO:
    def test_round_trip_discrete(self, tmp_path):
        rng = np.random.default_rng(0)
        voxel = DiscreteVoxel(data=rng.integers(-50, 50, (5, 6, 7)))
        path = tmp_path / "v.v2vx"
        pipeline.write_voxels(voxel, path)
        back = pipeline.read_voxels(path)
        assert back.dtype == np.float32
        assert np.array_equal(back.astype(np.int64), voxel.data)

    def test_round_trip_interpolated(self, tmp_path):
        rng = np.random.default_rng(1)
        voxel = InterpolatedVoxel(data=rng.uniform(-2, 2, (3, 4, 4)))
        path = tmp_path / "v.v2vx"
        pipeline.write_voxels(voxel, path)
        back = pipeline.read_voxels(path)
        assert np.array_equal(back, voxel.data.astype(np.float32))

    def test_payload_size_arithmetic(self, tmp_path):
        voxel = DiscreteVoxel(data=np.zeros((5, 180, 596), dtype=np.int64))
        path = tmp_path / "v.v2vx"
        pipeline.write_voxels(voxel, path)
        assert path.stat().st_size == 24 + 5 * 180 * 596 * 4

    def test_counts_beyond_float32_exactness_rejected(self, tmp_path):
        voxel = DiscreteVoxel(data=np.full((1, 1, 1), 2 ** 24, dtype=np.int64))
        with pytest.raises(DataError):
            pipeline.write_voxels(voxel, tmp_path / "v.v2vx")
        ok = DiscreteVoxel(data=np.full((1, 1, 1), 2 ** 24 - 1, dtype=np.int64))
        pipeline.write_voxels(ok, tmp_path / "ok.v2vx")

    def test_bad_magic_and_truncation_rejected(self, tmp_path):
        path = tmp_path / "v.v2vx"
        pipeline.write_voxels(DiscreteVoxel(data=np.ones((1, 2, 2), dtype=np.int64)), path)
        blob = path.read_bytes()
        (tmp_path / "magic.v2vx").write_bytes(b"XXXX" + blob[4:])
        with pytest.raises(DataError, match="magic"):
            pipeline.read_voxels(tmp_path / "magic.v2vx")
        (tmp_path / "trunc.v2vx").write_bytes(blob[:-3])
        with pytest.raises(DataError):
            pipeline.read_voxels(tmp_path / "trunc.v2vx")


class TestManifest:
    def make_manifest(self):
        return pipeline.DatasetManifest(scenes=(
            pipeline.SceneRecord(scene_id="a", frame_count=201, width=596, height=180,
                                 frame_rate=30.0, source_bytes=1_914_000,
                                 source_kind="dir", source_path="/data/a"),
            pipeline.SceneRecord(scene_id="b", frame_count=100, width=64, height=48,
                                 frame_rate=25.0, source_bytes=5_000),
        ))

    def test_round_trip(self, tmp_path):
        manifest = self.make_manifest()
        path = tmp_path / "manifest.json"
        pipeline.write_manifest(manifest, path)
        back = pipeline.read_manifest(path)
        assert back == manifest

    def test_write_is_deterministic(self, tmp_path):
        manifest = self.make_manifest()
        pipeline.write_manifest(manifest, tmp_path / "a.json")
        pipeline.write_manifest(manifest, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_malformed_manifest_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(DataError):
            pipeline.read_manifest(path)
        path.write_text('{"schema_version": 99, "scenes": []}')
        with pytest.raises(DataError):
            pipeline.read_manifest(path)


class TestStats:
    def test_single_scene_prestacked_bytes(self):
        manifest = pipeline.DatasetManifest(scenes=(
            pipeline.SceneRecord(scene_id="a", frame_count=201, width=596, height=180,
                                 frame_rate=30.0, source_bytes=1_914_000),
        ))
        report = pipeline.compute_stats(manifest, small_plan())
        assert report.sequences == 1
        assert report.prestacked_bytes == 85_824_000
        assert report.source_to_prestacked_ratio == pytest.approx(
            1_914_000 / 85_824_000)

    def test_empty_manifest_zero_report(self):
        report = pipeline.compute_stats(pipeline.DatasetManifest(scenes=()), small_plan())
        assert report.scene_count == 0
        assert report.sequences == 0
        assert report.prestacked_bytes == 0
        assert report.source_to_prestacked_ratio == 0.0

    def test_webvid_scale_sequence_count(self):
        # 2725 scenes x 3 windows + 7275 scenes x 2 windows = 22725 sequences.
        scenes = []
        for i in range(2725):
            scenes.append(pipeline.SceneRecord(
                scene_id=f"l{i}", frame_count=603, width=596, height=180,
                frame_rate=24.4, source_bytes=1_914_000))
        for i in range(7275):
            scenes.append(pipeline.SceneRecord(
                scene_id=f"s{i}", frame_count=402, width=596, height=180,
                frame_rate=24.4, source_bytes=1_914_000))
        manifest = pipeline.DatasetManifest(scenes=tuple(scenes))
        report = pipeline.compute_stats(manifest, small_plan())
        assert report.scene_count == 10_000
        assert report.sequences == 22_725
        assert report.source_bytes == 19_140_000_000
