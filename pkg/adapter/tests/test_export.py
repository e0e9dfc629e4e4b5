import numpy as np
import pytest
from PIL import Image

from kitti_det_adapter.config import AdapterConfig, parse_class_map
from kitti_det_adapter.export import (
    RawDetection,
    export_detections,
    export_frame,
    format_detection_line,
)


def _write_png(path, w=64, h=48):
    Image.fromarray(np.full((h, w, 3), 120, dtype=np.uint8)).save(path)


def _config(tmp_path, **kw):
    images = tmp_path / "images"
    images.mkdir(exist_ok=True)
    return AdapterConfig(model="stub", image_dir=images,
                         output_dir=tmp_path / "out", **kw)


class TestConfig:
    def test_class_map_parsing(self):
        assert parse_class_map("person=Pedestrian, car=Car") == \
            {"person": "Pedestrian", "car": "Car"}

    def test_bad_pair(self):
        with pytest.raises(ValueError):
            parse_class_map("person:Pedestrian")

    def test_floor_bounds(self, tmp_path):
        with pytest.raises(ValueError):
            _config(tmp_path, conf_floor=1.5)


class TestExportFrame:
    def test_sixteen_fields(self):
        line = format_detection_line("Pedestrian", 10, 20, 30, 60, 0.87)
        assert len(line.split()) == 16
        assert line.split()[0] == "Pedestrian"
        assert line.split()[-1] == "0.87"

    def test_floor_and_map_filter(self):
        dets = [RawDetection("person", 0, 0, 10, 20, 0.9),
                RawDetection("person", 0, 0, 10, 20, 0.1),
                RawDetection("bicycle", 0, 0, 10, 20, 0.9)]
        lines = export_frame(dets, 64, 48, 0.25, {"person": "Pedestrian"})
        assert len(lines) == 1
        assert lines[0].startswith("Pedestrian")

    def test_boxes_clamped_to_image(self):
        dets = [RawDetection("person", -5, -3, 200, 100, 0.8)]
        [line] = export_frame(dets, 64, 48, 0.25, {"person": "Pedestrian"})
        fields = line.split()
        l, t, r, b = (float(x) for x in fields[4:8])
        assert (l, t, r, b) == (0.0, 0.0, 64.0, 48.0)

    def test_degenerate_after_clamp_dropped(self):
        dets = [RawDetection("person", -20, 0, -5, 20, 0.8)]
        assert export_frame(dets, 64, 48, 0.25, {"person": "Pedestrian"}) == []

    def test_score_capped_at_one(self):
        dets = [RawDetection("person", 0, 0, 10, 20, 1.2)]
        [line] = export_frame(dets, 64, 48, 0.25, {"person": "Pedestrian"})
        assert float(line.split()[-1]) == 1.0


class TestExportDetections:
    def test_empty_image_dir(self, tmp_path):
        config = _config(tmp_path)
        count = export_detections(config, lambda img: [])
        assert count == 0
        assert config.output_dir.exists()
        assert list(config.output_dir.iterdir()) == []

    def test_no_detections_emits_empty_file(self, tmp_path):
        config = _config(tmp_path)
        _write_png(config.image_dir / "000001.png")
        count = export_detections(config, lambda img: [])
        assert count == 1
        out = config.output_dir / "000001.txt"
        assert out.exists()
        assert out.read_text() == ""

    def test_detection_round_trips_through_primary_parser(self, tmp_path):
        # the 16-field file is the contract with the analysis toolkit
        kitti_io = pytest.importorskip("occlubench.kitti_io")
        config = _config(tmp_path)
        _write_png(config.image_dir / "000002.png")

        def detector(img):
            return [RawDetection("person", 10.5, 5.0, 30.0, 45.5, 0.91)]

        export_detections(config, detector)
        frame = kitti_io.read_frame(config.output_dir / "000002.txt")
        [obj] = frame.objects
        assert isinstance(obj, kitti_io.Detection)
        assert obj.class_name == "Pedestrian"
        assert obj.score == 0.91
        assert (obj.bbox.left, obj.bbox.top, obj.bbox.right,
                obj.bbox.bottom) == (10.5, 5.0, 30.0, 45.5)

    def test_unreadable_image_skipped_run_continues(self, tmp_path, caplog):
        config = _config(tmp_path)
        (config.image_dir / "bad.png").write_bytes(b"not a png")
        _write_png(config.image_dir / "good.png")
        count = export_detections(config, lambda img: [])
        assert count == 1
        assert (config.output_dir / "good.txt").exists()
        assert not (config.output_dir / "bad.txt").exists()

    def test_detector_receives_rgb_array(self, tmp_path):
        config = _config(tmp_path)
        _write_png(config.image_dir / "a.png", w=32, h=16)
        seen = []

        def detector(img):
            seen.append(img.shape)
            return []

        export_detections(config, detector)
        assert seen == [(16, 32, 3)]


class TestCli:
    def test_unknown_model_spec_fails(self, tmp_path):
        from kitti_det_adapter.cli import main
        images = tmp_path / "images"
        images.mkdir()
        rc = main(["--model", "nonsense", "--images", str(images),
                   "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_missing_image_dir(self, tmp_path):
        from kitti_det_adapter.cli import main
        rc = main(["--model", "torchvision:fasterrcnn_resnet50_fpn",
                   "--images", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "out")])
        assert rc == 2
