import pytest

from esm_export.errors import InputError
from esm_export.fasta import FastaRecord, parse_fasta


def test_basic_parse_and_uppercase():
    recs = parse_fasta(">a\nacdef\n>b\nKLMNP\n")
    assert recs == [FastaRecord("a", "ACDEF"), FastaRecord("b", "KLMNP")]


def test_wrapped_lines_join():
    recs = parse_fasta(">a\nACD\nEFG\n")
    assert recs[0].residues == "ACDEFG"


def test_annotation_fields_ignored_in_id():
    recs = parse_fasta(">pep1|label=1|src=x\nACDEF\n")
    assert recs[0].id == "pep1"


def test_blank_lines_skipped():
    recs = parse_fasta("\n>a\n\nACD\n\n")
    assert recs[0].residues == "ACD"


def test_duplicate_id_rejected():
    with pytest.raises(InputError, match="duplicate"):
        parse_fasta(">a\nACD\n>a\nEFG\n")


def test_non_canonical_residue_rejected():
    with pytest.raises(InputError, match="non-canonical"):
        parse_fasta(">a\nACB\n")


def test_empty_id_rejected():
    with pytest.raises(InputError, match="empty id"):
        parse_fasta(">|label=1\nACD\n")


def test_empty_sequence_rejected():
    with pytest.raises(InputError, match="empty sequence"):
        parse_fasta(">a\n>b\nACD\n")


def test_headerless_data_rejected():
    with pytest.raises(InputError, match="before any"):
        parse_fasta("ACD\n")


def test_empty_input_rejected():
    with pytest.raises(InputError, match="no FASTA records"):
        parse_fasta("")
