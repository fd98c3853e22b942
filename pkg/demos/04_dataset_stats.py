"""
Why store video instead of voxels? The arithmetic
=================================================

Dense float32 voxels are enormous compared to compressed video. A
manifest plus a slicing plan is enough to do the bookkeeping exactly:
each training window of V voxels x B bins costs V*B*H*W*4 bytes if
pre-stacked, versus the source video's compressed footprint.
"""

from vid2voxel import DatasetManifest, SceneRecord, SlicePlan, compute_stats

# A web-video-scale corpus: 10,000 clips at 180x596 after cropping,
# averaging ~1.9 MB of compressed source each. Mixed lengths give some
# scenes two training windows and some three.
scenes = []
for i in range(2725):
    scenes.append(SceneRecord(scene_id=f"clip_{i:05d}", frame_count=603,
                              width=596, height=180, frame_rate=24.4,
                              source_bytes=1_914_000))
for i in range(2725, 10_000):
    scenes.append(SceneRecord(scene_id=f"clip_{i:05d}", frame_count=402,
                              width=596, height=180, frame_rate=24.4,
                              source_bytes=1_914_000))
manifest = DatasetManifest(scenes=tuple(scenes))

# 40 voxels of 5 bins per training sequence: one window eats 201 frames.
plan = SlicePlan(bins_per_voxel=5, voxels_per_sequence=40)
report = compute_stats(manifest, plan)

print(f"scenes:            {report.scene_count:,}")
print(f"total frames:      {report.total_frames:,}")
print(f"duration:          {report.duration_seconds / 3600:.1f} h")
print(f"resolutions:       {', '.join(report.resolutions)}")
print(f"training windows:  {report.sequences:,}  (length {plan.window_length} frames)")
print(f"frames / 40:       {report.frames_div_40:,.0f}  (cross-dataset normalization)")
print(f"source storage:    {report.source_bytes / 1e9:.2f} GB")
print(f"pre-stacked voxels:{report.prestacked_bytes / 1e9:9.2f} GB")
print(f"source : voxels =  1 : {1 / report.source_to_prestacked_ratio:.1f}")

# Per sequence, the exact cost of going dense:
per_window = plan.voxels_per_sequence * plan.bins_per_voxel * 180 * 596 * 4
print(f"\none 180x596 window pre-stacked: {per_window:,} bytes "
      f"({per_window / 1e6:.1f} MB) vs ~1.9 MB of video")
