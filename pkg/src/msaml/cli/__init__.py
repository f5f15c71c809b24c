from .io import (DataError, dump_matrix, format_annotation, load_matrix, parse_annotation,
                 parse_beats, read_index, read_matrix, write_matrix)
from .main import main
from .render import render_ssm, ssm_to_pgm
from .synth import SynthConfig, synth_songs, write_corpus
