from av_identity_guard.idb.bottleneck import BottleneckBlock, IdentityBottleneck, IdentityTokens, TokenSource
