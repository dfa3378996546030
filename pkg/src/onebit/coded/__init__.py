"""LDPC-coded BICM over the one-bit channel."""
