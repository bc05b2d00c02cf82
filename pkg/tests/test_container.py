import numpy as np
import pytest

from sleepfuse import container as C


class TestAasmMapping:
    def test_light_merges_n1_n2(self):
        assert C.map_aasm_to_4class("N1") == 1
        assert C.map_aasm_to_4class("N2") == 1

    def test_wake(self):
        assert C.map_aasm_to_4class("W") == 0

    def test_deep_and_rem(self):
        assert C.map_aasm_to_4class("N3") == 2
        assert C.map_aasm_to_4class("REM") == 3

    def test_legacy_requires_opt_in(self):
        with pytest.raises(ValueError):
            C.map_aasm_to_4class("S4")
        assert C.map_aasm_to_4class("S4", allow_legacy=True) == 2

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            C.map_aasm_to_4class("MOVEMENT")


class TestRecordingContainer:
    def test_round_trip_bit_exact(self, tmp_path, np_rng):
        samples = np_rng.normal(size=10_000).astype(np.float32).astype(np.float64)
        rec = C.RawRecording(samples, 125.0, "sceeg", "s001", "C4-M1")
        p1, p2 = tmp_path / "a.srec", tmp_path / "b.srec"
        C.write_recording(p1, rec)
        loaded = C.read_recording(p1)
        C.write_recording(p2, loaded)
        assert p1.read_bytes() == p2.read_bytes()
        np.testing.assert_array_equal(loaded.samples, samples)
        assert (loaded.subject_id, loaded.modality, loaded.channel) == ("s001", "sceeg", "C4-M1")

    def test_corrupt_header(self, tmp_path):
        path = tmp_path / "bad.srec"
        path.write_bytes(b"SREC" + (1).to_bytes(4, "little") + (5).to_bytes(4, "little") + b"{oops" )
        with pytest.raises(C.ContainerError):
            C.read_recording(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad2.srec"
        path.write_bytes(b"EDF0" + b"\x00" * 32)
        with pytest.raises(C.ContainerError):
            C.read_recording(path)

    def test_payload_count_cross_check(self, tmp_path):
        rec = C.RawRecording(np.ones(100), 64.0, "ppg", "s002")
        path = tmp_path / "c.srec"
        C.write_recording(path, rec)
        truncated = path.read_bytes()[:-4]
        path.write_bytes(truncated)
        with pytest.raises(C.ContainerError):
            C.read_recording(path)

    def test_rational_rate_round_trip(self, tmp_path):
        from fractions import Fraction

        rec = C.RawRecording(np.ones(2048), Fraction(1024, 30), "ppg", "s003", preprocessed=True)
        path = tmp_path / "d.srec"
        C.write_recording(path, rec)
        assert C.read_recording(path).rate_hz == Fraction(1024, 30)

    def test_invalid_recordings_rejected(self):
        with pytest.raises(ValueError):
            C.RawRecording(np.array([]), 10.0, "ppg", "x")
        with pytest.raises(ValueError):
            C.RawRecording(np.array([1.0, np.nan]), 10.0, "ppg", "x")
        with pytest.raises(ValueError):
            C.RawRecording(np.ones(5), 0.0, "ppg", "x")

    def test_converter_entry_point(self):
        rec = C.from_external([0.0, 1.0, 2.0], 10.0, "sceeg", "ext01", "Fpz")
        assert rec.rate_hz == 10.0 and rec.samples.dtype == np.float64


class TestHypnogramCsv:
    def test_round_trip(self, tmp_path):
        hyp = C.Hypnogram("s004", np.array([0, 1, 1, 2, 3, 0]))
        path = tmp_path / "s004_hypnogram.csv"
        C.write_hypnogram(path, hyp)
        back = C.read_hypnogram(path)
        np.testing.assert_array_equal(back.stages, hyp.stages)
        assert back.subject_id == "s004"
        assert path.read_text().splitlines()[0] == "epoch_index,stage_label"

    def test_aasm_column_preserved(self, tmp_path):
        hyp = C.Hypnogram("s005", np.array([0, 1, 2]), aasm_labels=["W", "N2", "N3"])
        path = tmp_path / "s005_hypnogram.csv"
        C.write_hypnogram(path, hyp)
        back = C.read_hypnogram(path)
        assert back.aasm_labels == ["W", "N2", "N3"]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            C.Hypnogram("x", np.array([0, 4]))


class TestSplits:
    def test_fractions(self):
        ids = [f"s{i:03d}" for i in range(10)]
        m = C.split_subjects(ids, (0.6, 0.2, 0.2), seed=5)
        assert (len(m.train), len(m.val), len(m.test)) == (6, 2, 2)

    def test_deterministic(self):
        ids = [f"s{i:03d}" for i in range(25)]
        a = C.split_subjects(ids, (0.6, 0.2, 0.2), seed=9)
        b = C.split_subjects(ids, (0.6, 0.2, 0.2), seed=9)
        assert (a.train, a.val, a.test) == (b.train, b.val, b.test)
        c = C.split_subjects(ids, (0.6, 0.2, 0.2), seed=10)
        assert a.train != c.train

    def test_partition_property(self):
        ids = [f"s{i:03d}" for i in range(17)]
        m = C.split_subjects(ids, (0.5, 0.25, 0.25), seed=1)
        combined = m.train + m.val + m.test
        assert sorted(combined) == sorted(ids)
        assert len(set(combined)) == len(ids)

    def test_disjointness_enforced(self):
        with pytest.raises(ValueError):
            C.SplitManifest(["a", "b"], ["b"], ["c"])

    def test_too_few_subjects(self):
        with pytest.raises(ValueError):
            C.split_subjects(["only"], (0.5, 0.25, 0.25), seed=0)

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            C.split_subjects(list("abcdef"), (0.5, 0.2, 0.2), seed=0)

    def test_manifest_round_trip(self, tmp_path):
        m = C.split_subjects([f"s{i}" for i in range(12)], (0.5, 0.25, 0.25), seed=3)
        path = tmp_path / "splits.json"
        m.save(path)
        back = C.SplitManifest.load(path)
        assert (back.train, back.val, back.test) == (m.train, m.val, m.test)
