# spintomo test suite
