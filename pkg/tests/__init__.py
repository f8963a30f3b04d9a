# Tests for chaos-trng
