"""URL feature extraction: 49 lexical slots and 40 web slots."""
