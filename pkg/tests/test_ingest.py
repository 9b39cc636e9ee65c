"""Loaders and the synthetic generator."""

import numpy as np
import pytest

from pcgkit.dsp import frame_labels
from pcgkit.errors import DataError
from pcgkit.ingest.binary import load_binary_dataset
from pcgkit.ingest.circor import load_circor, parse_patient_metadata
from pcgkit.ingest.corpus import CorpusConfig, apportion, generate_corpus
from pcgkit.ingest.audio_io import write_wav
from pcgkit.ingest.records import MurmurAnnotation, PCGRecording, PhaseFeatures, SegmentIntervals
from pcgkit.ingest.synth import MurmurSpec, SynthSpec, synthesize_pcg
from pcgkit.segmenter.postprocess import mask_to_intervals

from conftest import synth_corpus_entries


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(seed=42, murmur=MurmurSpec())
        rec1, seg1, _ = synthesize_pcg(spec)
        rec2, seg2, _ = synthesize_pcg(spec)
        assert np.array_equal(rec1.samples, rec2.samples)
        assert seg1.intervals == seg2.intervals

    def test_duration_arithmetic(self):
        rec, _, _ = synthesize_pcg(SynthSpec(n_beats=5, beat_period_s=0.8, seed=0))
        assert abs(rec.duration_s - 4.0) <= 1.0 / rec.sample_rate

    def test_no_murmur_is_absent(self):
        _, _, annotation = synthesize_pcg(SynthSpec(seed=1, murmur=None))
        assert annotation.murmur_class == "Absent"
        assert annotation.systolic.empty and annotation.diastolic.empty

    def test_murmur_above_nyquist_rejected(self):
        spec = SynthSpec(seed=0, murmur=MurmurSpec(band_hz=(1500.0, 2500.0)))
        with pytest.raises(DataError, match="Nyquist"):
            synthesize_pcg(spec)

    def test_murmur_annotation_labels(self):
        murmur = MurmurSpec(
            phase="diastolic", band_hz=(150.0, 250.0), shape="diamond",
            rel_amplitude=0.3, timing="holo",
        )
        _, _, annotation = synthesize_pcg(SynthSpec(seed=2, murmur=murmur))
        assert annotation.murmur_class == "Present"
        assert annotation.diastolic.timing == "Holodiastolic"
        assert annotation.diastolic.shape == "Diamond"
        assert annotation.diastolic.grading == "II/VI"
        assert annotation.systolic.empty

    def test_interval_frame_roundtrip_within_one_hop(self):
        # rasterize the generator's exact intervals and recover them
        hop_s = 0.01
        for rec, intervals, _ in synth_corpus_entries(6, base_seed=50):
            n_frames = int(rec.duration_s / hop_s)
            mask = frame_labels(intervals, n_frames, hop_s)
            recovered = mask_to_intervals(mask, 0.5, 0.5, 0.0)
            assert len(recovered) == len(intervals)
            for (on_r, off_r, _), (on_t, off_t, _) in zip(recovered, intervals):
                assert abs(on_r - on_t) <= hop_s
                assert abs(off_r - off_t) <= hop_s

    def test_samples_in_range(self):
        rec, _, _ = synthesize_pcg(SynthSpec(seed=9, noise_snr_db=0.0))
        assert np.max(np.abs(rec.samples)) <= 1.0


def write_circor_fixture(root, patient_id="10001", site="AV", rate=4000,
                         murmur="Absent", locations="nan", tsv_rows=None,
                         extra_lines=(), n_samples=8000):
    rng = np.random.default_rng(0)
    write_wav(root / f"{patient_id}_{site}.wav", rate, rng.uniform(-0.1, 0.1, n_samples))
    if tsv_rows is not None:
        (root / f"{patient_id}_{site}.tsv").write_text(
            "".join(f"{a}\t{b}\t{c}\n" for a, b, c in tsv_rows)
        )
    lines = [f"{patient_id} 1 {rate}", f"#Murmur: {murmur}", f"#Murmur locations: {locations}"]
    lines += list(extra_lines)
    (root / f"{patient_id}.txt").write_text("\n".join(lines) + "\n")


class TestCirCorLoader:
    def test_sample_rate_from_metadata(self, tmp_path):
        write_circor_fixture(tmp_path, rate=4000, tsv_rows=[(0.0, 0.4, 1)])
        [(recording, _, _)] = load_circor(tmp_path)
        assert recording.sample_rate == 4000

    def test_absent_murmur_has_empty_phases(self, tmp_path):
        write_circor_fixture(tmp_path, murmur="Absent", tsv_rows=[(0.0, 0.4, 1)])
        [(_, _, annotation)] = load_circor(tmp_path)
        assert annotation.murmur_class == "Absent"
        assert annotation.systolic.empty and annotation.diastolic.empty

    def test_two_row_segmentation_fixture(self, tmp_path):
        # oracle: parse the fixture rows with plain line splitting
        fixture = "0.0\t0.4\t1\n0.4\t0.8\t2\n"
        expected = []
        code_names = {1: "S1", 2: "systole"}
        for line in fixture.strip().splitlines():
            onset, offset, code = line.split("\t")
            expected.append((float(onset), float(offset), code_names[int(code)]))

        write_circor_fixture(tmp_path, tsv_rows=[(0.0, 0.4, 1), (0.4, 0.8, 2)])
        [(_, segments, _)] = load_circor(tmp_path)
        assert list(segments) == expected

    def test_code_zero_maps_to_unlabeled(self, tmp_path):
        write_circor_fixture(tmp_path, tsv_rows=[(0.0, 0.5, 0)])
        [(_, segments, _)] = load_circor(tmp_path)
        assert segments.intervals[0][2] == "unlabeled"

    def test_missing_tsv_warns_and_loads_empty(self, tmp_path, caplog):
        write_circor_fixture(tmp_path, tsv_rows=None)
        with caplog.at_level("WARNING"):
            [(_, segments, _)] = load_circor(tmp_path)
        assert len(segments) == 0
        assert any("no segmentation table" in r.message for r in caplog.records)

    def test_malformed_metadata_line_names_file_and_line(self, tmp_path):
        write_circor_fixture(tmp_path, tsv_rows=[(0.0, 0.4, 1)])
        meta = tmp_path / "10001.txt"
        meta.write_text(meta.read_text() + "#Broken line without colon\n")
        with pytest.raises(DataError, match=r"10001\.txt:4"):
            load_circor(tmp_path)

    def test_murmur_audible_follows_locations(self, tmp_path):
        feature_lines = [
            "#Systolic murmur timing: Holosystolic",
            "#Systolic murmur shape: Plateau",
            "#Systolic murmur grading: II/VI",
            "#Systolic murmur pitch: Medium",
            "#Systolic murmur quality: Harsh",
        ]
        rng = np.random.default_rng(0)
        for site in ("AV", "MV"):
            write_wav(tmp_path / f"10002_{site}.wav", 4000, rng.uniform(-0.1, 0.1, 8000))
            (tmp_path / f"10002_{site}.tsv").write_text("0.0\t0.4\t1\n")
        (tmp_path / "10002.txt").write_text(
            "\n".join(["10002 2 4000", "#Murmur: Present", "#Murmur locations: AV"] + feature_lines) + "\n"
        )
        loaded = {rec.site: ann for rec, _, ann in load_circor(tmp_path)}
        assert loaded["aortic"].murmur_audible is True
        assert loaded["mitral"].murmur_audible is False
        # patient-level labels identical on both recordings
        assert loaded["aortic"].systolic == loaded["mitral"].systolic

    def test_unparseable_optional_fields_default_unknown(self, tmp_path, caplog):
        write_circor_fixture(tmp_path, murmur="Maybe?", tsv_rows=[(0.0, 0.4, 1)])
        with caplog.at_level("WARNING"):
            [(_, _, annotation)] = load_circor(tmp_path)
        assert annotation.murmur_class == "Unknown"


class TestBinaryLoader:
    def test_cinc_reference_row(self, tmp_path):
        subset = tmp_path / "training-a"
        subset.mkdir()
        write_wav(subset / "a0001.wav", 2000, np.zeros(4000) + 0.01)
        (subset / "REFERENCE.csv").write_text("a0001,1\n")
        [(recording, label)] = load_binary_dataset(tmp_path, "cinc2016")
        assert recording.recording_id == "a0001"
        assert label == "abnormal"

    def test_cinc_missing_audio_skipped_with_warning(self, tmp_path, caplog):
        subset = tmp_path / "training-b"
        subset.mkdir()
        write_wav(subset / "b0001.wav", 2000, np.zeros(4000) + 0.01)
        (subset / "REFERENCE.csv").write_text("b0001,-1\nb0002,1\n")
        with caplog.at_level("WARNING"):
            entries = load_binary_dataset(tmp_path, "cinc2016")
        assert [label for _, label in entries] == ["normal"]
        assert any("skipped" in r.message for r in caplog.records)

    def test_pascal_counts_and_empty_class(self, tmp_path):
        (tmp_path / "Btraining_normal").mkdir()
        (tmp_path / "Btraining_murmur").mkdir()
        (tmp_path / "Btraining_extrastole").mkdir()  # ignored non-class folder
        rng = np.random.default_rng(0)
        for i in range(3):
            write_wav(tmp_path / "Btraining_normal" / f"n{i}.wav", 4000, rng.uniform(-0.1, 0.1, 4000))
        for i in range(2):
            write_wav(tmp_path / "Btraining_murmur" / f"m{i}.wav", 4000, rng.uniform(-0.1, 0.1, 4000))
        entries = load_binary_dataset(tmp_path, "pascal_b")
        labels = [label for _, label in entries]
        assert len(entries) == 5
        assert labels.count("normal") == 3 and labels.count("abnormal") == 2

    def test_empty_class_folder_is_fine(self, tmp_path):
        (tmp_path / "normal").mkdir()
        assert load_binary_dataset(tmp_path, "pascal_a") == []

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(DataError, match="unknown binary dataset kind"):
            load_binary_dataset(tmp_path, "pascal_c")


class TestCorpusGeneration:
    def test_apportionment_exact(self):
        assert apportion((0.74, 0.19, 0.07), 100) == [74, 19, 7]

    def test_corpus_roundtrips_through_loader(self, tmp_path):
        config = CorpusConfig(n_patients=10, seed=5)
        summary = generate_corpus(tmp_path, config)
        loaded = load_circor(tmp_path)
        assert summary["recordings"] == len(loaded)
        assert sum(summary["class_counts"].values()) == 10

        # label replication: identical annotation per patient (modulo audibility)
        by_patient = {}
        for recording, segments, annotation in loaded:
            assert len(segments) > 0
            key = recording.patient_id
            stripped = annotation.for_recording(False)
            by_patient.setdefault(key, stripped)
            assert by_patient[key] == stripped

    def test_generation_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        config = CorpusConfig(n_patients=6, seed=9)
        generate_corpus(a, config)
        generate_corpus(b, config)
        for path_a in sorted(a.iterdir()):
            if path_a.name == "corpus_summary.json":
                continue
            assert (b / path_a.name).read_bytes() == path_a.read_bytes()


class TestRecordInvariants:
    def test_recording_validation(self):
        with pytest.raises(DataError):
            PCGRecording("p", "aortic", np.array([]), 4000)
        with pytest.raises(DataError):
            PCGRecording("p", "nowhere", np.zeros(10), 4000)
        rec = PCGRecording("p", "mitral", np.zeros(400), 100)
        assert rec.duration_s == pytest.approx(4.0)
        assert rec.recording_id == "p_mitral"

    def test_interval_validation(self):
        with pytest.raises(DataError):
            SegmentIntervals(((0.5, 0.1, "S1"),))
        with pytest.raises(DataError):
            SegmentIntervals(((0.0, 0.5, "S1"), (0.3, 0.8, "S2")))
        with pytest.raises(DataError):
            SegmentIntervals(((0.0, 0.5, "S9"),))

    def test_absent_forces_empty_features(self):
        with pytest.raises(DataError):
            MurmurAnnotation("Absent", systolic=PhaseFeatures(timing="Holosystolic"))
