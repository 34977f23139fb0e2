"""Message-to-packet translation, reliability and the capture tap."""
