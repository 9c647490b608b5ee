"""Sampling-based minimum Bayes risk decoding on exactly enumerable toy models."""
from .decode import (DecodeResult, DecoderConfig, Hypothesis, HypothesisSpace, build_hypothesis_space,
                     map_decode, mbr_c2f, mbr_n_by_n, mbr_n_by_s)
from .estimate import (CallCounter, ExactOracle, SampleSet, UtilityEstimate, draw_samples,
                       exact_expected_utility, mc_expected_utility, rank_by_expected_utility)
from .seqmodel import (ScoredSequence, ToySequenceModel, Vocabulary, ancestral_sample, beam_search,
                       derive_rng, enumerate_support, load_model, log_prob, nucleus_sample)
from .utility import (TokenizedSentence, UtilityFunction, char_ngram_f, corpus_aggregate, exact_match,
                      get_utility, sentence_bleu, skip_bigram_f1, unigram_f1)

__version__ = "0.1.0"
