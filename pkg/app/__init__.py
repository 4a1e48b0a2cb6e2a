# spintomo package
