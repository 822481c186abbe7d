# logmend test suite
