import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import FeatureFileError
from core.features_io import (KEYPOINT_MAGIC, canonicalize, format_keypoints,
                              format_matches, is_keypoint_file,
                              parse_keypoints, parse_matches, read_keypoints,
                              write_keypoints, write_matches)
from core.keypoints import DESCRIPTOR_LENGTH, Descriptor128, Keypoint, detect_and_describe
from core.matching import Match, MatchResult


def make_feature(x=10.5, y=20.25, orientation=45.0):
    values = np.linspace(0.01, 0.2, DESCRIPTOR_LENGTH)
    kp = Keypoint(x=x, y=y, sigma=2.5, orientation=orientation, response=0.07, octave=1, level=2)
    return kp, Descriptor128(values / np.linalg.norm(values))


class TestKeypointFile:
    def test_header_and_line_layout(self):
        text = format_keypoints([make_feature(), make_feature(x=3.0)])
        lines = text.splitlines()
        assert lines[0] == f"{KEYPOINT_MAGIC} count=2"
        assert len(lines) == 3
        assert all(len(line.split()) == 5 + DESCRIPTOR_LENGTH for line in lines[1:])
        assert lines[1].split()[:5] == ["10.5", "20.25", "2.5", "45", "0.07"]
        assert text.endswith("\n")

    def test_parse_back_within_print_precision(self, textured_image):
        features = detect_and_describe(textured_image)
        parsed = parse_keypoints(format_keypoints(features))
        assert len(parsed) == len(features)
        for (kp, desc), (kp2, desc2) in zip(features, parsed):
            assert kp2.x == pytest.approx(kp.x, rel=1e-5, abs=1e-5)
            assert kp2.orientation == pytest.approx(kp.orientation, rel=1e-5, abs=1e-4)
            assert_allclose(desc2.values, desc.values, rtol=1e-5, atol=1e-6)

    def test_octave_and_level_are_not_stored(self):
        (kp, _), = parse_keypoints(format_keypoints([make_feature()]))
        assert (kp.octave, kp.level) == (0, 0)

    def test_canonicalize_is_idempotent(self, textured_image):
        once = canonicalize(detect_and_describe(textured_image))
        assert format_keypoints(canonicalize(once)) == format_keypoints(once)

    def test_orientation_is_wrapped(self):
        text = format_keypoints([make_feature()]).replace(" 45 ", " 405 ", 1)
        (kp, _), = parse_keypoints(text)
        assert kp.orientation == pytest.approx(45.0)

    def test_empty_feature_list(self):
        assert parse_keypoints(format_keypoints([])) == []

    @pytest.mark.parametrize("mutate,message", [
        (lambda text: "", "empty"),
        (lambda text: text.replace("keypoints v1", "keypoints v9"), "header"),
        (lambda text: text.replace("count=1", "count=2"), "count=2"),
        (lambda text: text.rstrip("\n") + " 0.5\n", "expected"),
        (lambda text: text.replace(" 45 ", " abc ", 1), "non-numeric"),
    ])
    def test_malformed(self, mutate, message):
        with pytest.raises(FeatureFileError, match=message):
            parse_keypoints(mutate(format_keypoints([make_feature()])))

    def test_negative_descriptor_value(self):
        text = format_keypoints([make_feature()])
        head, tail = text.rsplit(" ", 1)
        with pytest.raises(FeatureFileError, match=":2:"):
            parse_keypoints(f"{head} -{tail}")

    def test_file_helpers(self, tmp_path):
        path = write_keypoints(tmp_path / "a.kp", [make_feature()])
        assert is_keypoint_file(path)
        assert len(read_keypoints(path)) == 1

        other = tmp_path / "b.pgm"
        other.write_bytes(b"P5\n1 1\n255\n\x00")
        assert not is_keypoint_file(other)

    def test_errors_name_the_file(self, tmp_path):
        path = tmp_path / "bad.kp"
        path.write_text("nonsense\n")
        with pytest.raises(FeatureFileError, match="bad.kp"):
            read_keypoints(path)


class TestMatchFile:
    def test_layout_and_parse(self, tmp_path):
        result = MatchResult(matches=(Match(0, 3, 0.125, 10.0), Match(2, 1, 0.5, 359.5)), n_a=4, n_b=5, rate=0.5)
        text = format_matches(result)
        assert text.splitlines() == [
            "# sift-bench matches v1 r=0.500000",
            "0 3 0.125000 10.000000",
            "2 1 0.500000 359.500000",
        ]
        parsed = parse_matches(write_matches(tmp_path / "m.txt", result).read_text())
        assert parsed.rate == 0.5
        assert parsed.matches == result.matches

    def test_write_replaces_previous_dump(self, tmp_path):
        path = tmp_path / "out" / "m.txt"
        write_matches(path, MatchResult(matches=(Match(0, 0, 0.0, 0.0),), n_a=1, n_b=1, rate=1.0))
        write_matches(path, MatchResult(matches=(), n_a=2, n_b=2, rate=0.0))
        assert path.read_text() == "# sift-bench matches v1 r=0.000000\n"
        assert [p.name for p in path.parent.iterdir()] == ["m.txt"]

    def test_failed_write_keeps_previous_dump(self, tmp_path, monkeypatch):
        path = tmp_path / "m.txt"
        path.write_text("previous\n")

        def broken_replace(src, dst):
            if str(src).endswith(".tmp"):
                raise OSError("read-only")
            os.rename(src, dst)

        monkeypatch.setattr("core.rollback.os.replace", broken_replace)
        with pytest.raises(OSError):
            write_matches(path, MatchResult(matches=(), n_a=0, n_b=0, rate=0.0))
        assert path.read_text() == "previous\n"
        assert [p.name for p in tmp_path.iterdir()] == ["m.txt"]

    def test_no_matches(self):
        parsed = parse_matches(format_matches(MatchResult(matches=(), n_a=0, n_b=3, rate=0.0)))
        assert parsed.n_matches == 0
        assert parsed.rate == 0.0

    @pytest.mark.parametrize("text", ["", "r=0.5\n", "# sift-bench matches v1 r=0.5\n1 2 x 4\n",
                                      "# sift-bench matches v1 r=0.5\n1 2 3\n"])
    def test_malformed(self, text):
        with pytest.raises(FeatureFileError):
            parse_matches(text)
