"""The embed-export command line, driven in process."""

import numpy as np
import pytest
from airtran import read_matrix

from embed_export.cli import main
from embed_export.exporter import encode_texts


@pytest.fixture()
def texts_file(tmp_path):
    path = tmp_path / "texts.txt"
    path.write_text(
        "the quick brown fox\n\nquery about models\nrank the documents\n",
        encoding="utf-8",
    )
    return path  # 4 texts, line 2 intentionally blank


class TestExportCommand:
    def test_end_to_end(self, tiny_model_dir, texts_file, tmp_path, capsys):
        out = tmp_path / "queries.mat"
        rc = main(["--model", tiny_model_dir, "--input", str(texts_file),
                   "--role", "query", "--out", str(out)])
        assert rc == 0
        assert "wrote 4 query embeddings" in capsys.readouterr().err
        assert read_matrix(out).shape == (4, 32)

    def test_blank_line_keeps_its_row(self, encoder, tiny_model_dir, texts_file,
                                      tmp_path):
        out = tmp_path / "queries.mat"
        assert main(["--model", tiny_model_dir, "--input", str(texts_file),
                     "--role", "query", "--out", str(out)]) == 0
        tokenizer, model = encoder
        expected = encode_texts(
            tokenizer, model,
            ["the quick brown fox", "", "query about models", "rank the documents"],
        )
        assert np.array_equal(read_matrix(out), expected)

    def test_missing_input_exits_2(self, tiny_model_dir, tmp_path, capsys):
        rc = main(["--model", tiny_model_dir, "--input", str(tmp_path / "nope.txt"),
                   "--role", "query", "--out", str(tmp_path / "q.mat")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_unloadable_model_exits_2(self, texts_file, tmp_path, capsys):
        rc = main(["--model", str(tmp_path / "not-a-model"),
                   "--input", str(texts_file),
                   "--role", "query", "--out", str(tmp_path / "q.mat")])
        assert rc == 2
        assert "cannot load" in capsys.readouterr().err

    def test_empty_input_exits_3(self, tiny_model_dir, tmp_path, capsys):
        empty = tmp_path / "empty.txt"
        empty.write_text("", encoding="utf-8")
        rc = main(["--model", tiny_model_dir, "--input", str(empty),
                   "--role", "query", "--out", str(tmp_path / "q.mat")])
        assert rc == 3
        assert "no texts" in capsys.readouterr().err

    @pytest.mark.parametrize("flag,value", [("--batch-size", "0"),
                                            ("--max-length", "-3")])
    def test_bad_flag_exits_6(self, tiny_model_dir, texts_file, tmp_path,
                              flag, value):
        rc = main(["--model", tiny_model_dir, "--input", str(texts_file),
                   "--role", "query", "--out", str(tmp_path / "q.mat"),
                   flag, value])
        assert rc == 6

    def test_bad_role_rejected_by_parser(self, tiny_model_dir, texts_file,
                                         tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["--model", tiny_model_dir, "--input", str(texts_file),
                  "--role", "passage", "--out", str(tmp_path / "q.mat")])
        assert exc.value.code == 2
