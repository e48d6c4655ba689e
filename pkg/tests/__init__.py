from stactools.testing.test_data import TestData

test_data = TestData(__file__)
