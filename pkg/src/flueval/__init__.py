"""flueval: referenceless fluency scoring and metric meta-evaluation.

Core pieces: deterministic tokenization (text), wordpiece-style subword
vocabularies (subword), a Kneser-Ney n-gram LM (ngram_lm), SLOR/NCE/PPL
scorers (scorers), ROUGE-L and n-gram overlap baselines (overlap),
correlation and significance statistics (stats), and the dataset/report
harness (harness). The CLI lives in cli, the HTTP service in service.
"""

__version__ = "0.1.0"
