import json

import numpy as np
import pytest

from motionbox.core import Box, BoxTrackSet, LatentCode, ObjectTrack, validate_binary_video, validate_video
from motionbox.errors import DimensionError, FormatError, NumericError, ValidationError
from motionbox.videoio import (
    load_tracks,
    load_video,
    save_tracks,
    save_video,
    tracks_from_json,
    tracks_to_json,
)


def test_load_video_black_frames(tmp_path):
    v = np.zeros((16, 64, 64, 3), dtype=np.float32)
    save_video(v, tmp_path / "vid")
    out = load_video(tmp_path / "vid")
    assert out.shape == (16, 64, 64, 3)
    assert out.max() == 0.0


def test_load_video_single_white_frame(tmp_path):
    v = np.ones((1, 64, 64, 3), dtype=np.float32)
    save_video(v, tmp_path / "vid")
    out = load_video(tmp_path / "vid")
    assert out.shape[0] == 1
    assert (out == 1.0).all()


def test_load_video_gap_raises_format_error(tmp_path):
    v = np.zeros((3, 16, 16, 3), dtype=np.float32)
    save_video(v, tmp_path / "vid")
    (tmp_path / "vid" / "0001.png").unlink()
    with pytest.raises(FormatError, match="index 1"):
        load_video(tmp_path / "vid")


def test_load_video_mixed_dimensions(tmp_path):
    save_video(np.zeros((2, 16, 16, 3), dtype=np.float32), tmp_path / "vid")
    # overwrite frame 1 with a different size
    from motionbox.videoio import encode_frame_png

    (tmp_path / "vid" / "0001.png").write_bytes(
        encode_frame_png(np.zeros((8, 8, 3), dtype=np.float32))
    )
    with pytest.raises(DimensionError):
        load_video(tmp_path / "vid")


def test_round_trip_quantization_bound(tmp_path):
    rng = np.random.default_rng(7)
    v = rng.uniform(0, 1, size=(4, 32, 32, 3)).astype(np.float32)
    save_video(v, tmp_path / "vid")
    out = load_video(tmp_path / "vid")
    assert np.abs(out - v).max() <= 1.0 / 255.0


def test_binary_round_trip_exact(tmp_path):
    rng = np.random.default_rng(3)
    v = (rng.uniform(0, 1, size=(4, 16, 16, 1)) > 0.5).astype(np.float32)
    save_video(v, tmp_path / "vid")
    out = load_video(tmp_path / "vid")
    assert (out == v).all()


def test_save_video_manifest(tmp_path):
    manifest = save_video(np.zeros((16, 64, 64, 3), dtype=np.float32), tmp_path / "vid")
    assert manifest == {"n": 16, "h": 64, "w": 64, "c": 3}
    on_disk = json.loads((tmp_path / "vid" / "manifest.json").read_text())
    assert on_disk == manifest


def test_validate_video_rejects_nan_and_range():
    bad = np.zeros((1, 8, 8, 3), dtype=np.float32)
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(NumericError):
        validate_video(bad)
    over = np.full((1, 8, 8, 3), 1.5, dtype=np.float32)
    with pytest.raises(ValidationError):
        validate_video(over)


def test_validate_binary_video_rejects_fractions():
    v = np.full((1, 8, 8, 1), 0.5, dtype=np.float32)
    with pytest.raises(ValidationError):
        validate_binary_video(v)


def test_box_invariants():
    with pytest.raises(ValidationError):
        Box(4, 0, 4, 4)
    with pytest.raises(ValidationError):
        Box(-1, 0, 4, 4)
    b = Box(0, 0, 4, 4)
    assert b.area() == 16
    assert b.iou(Box(2, 0, 6, 4)) == pytest.approx(8 / 24)


def test_latent_code_kinds():
    LatentCode(np.zeros(8), "motion")
    with pytest.raises(ValidationError):
        LatentCode(np.zeros(8), "style")
    with pytest.raises(NumericError):
        LatentCode(np.array([np.inf]), "noise")


def test_tracks_round_trip_canonical(tmp_path):
    t = BoxTrackSet(
        num_frames=2,
        width=8,
        height=8,
        objects=[ObjectTrack(id=0, boxes=[Box(0, 0, 4, 4), Box(2, 0, 6, 4)])],
    )
    path = tmp_path / "tracks.json"
    save_tracks(t, path)
    text1 = path.read_text()
    loaded = load_tracks(path)
    assert tracks_to_json(loaded) == text1
    assert loaded.objects[0].boxes[1] == Box(2, 0, 6, 4)


def test_tracks_absent_box_accepted():
    t = tracks_from_json(
        json.dumps(
            {
                "num_frames": 2,
                "width": 8,
                "height": 8,
                "objects": [{"id": 0, "boxes": [[0, 0, 4, 4], None]}],
            }
        )
    )
    assert t.objects[0].boxes[1] is None


def test_tracks_empty_objects_valid():
    t = tracks_from_json(
        json.dumps({"num_frames": 3, "width": 8, "height": 8, "objects": []})
    )
    assert t.num_frames == 3
    assert t.objects == []


def test_tracks_degenerate_box_cites_object_and_frame():
    payload = {
        "num_frames": 1,
        "width": 8,
        "height": 8,
        "objects": [{"id": 5, "boxes": [[4, 0, 4, 4]]}],
    }
    with pytest.raises(ValidationError, match="object 5 frame 0"):
        tracks_from_json(json.dumps(payload))


def test_tracks_wrong_length_rejected():
    payload = {
        "num_frames": 2,
        "width": 8,
        "height": 8,
        "objects": [{"id": 0, "boxes": [[0, 0, 4, 4]]}],
    }
    with pytest.raises(ValidationError, match="object 0"):
        tracks_from_json(json.dumps(payload))
