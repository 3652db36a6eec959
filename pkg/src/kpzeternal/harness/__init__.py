"""Command-line harness: configuration, corpus, verification suites, artifacts."""
