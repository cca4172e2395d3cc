from av_identity_guard.matchnet.matcher import IdentityMatcher, MatchBlock, passthrough
