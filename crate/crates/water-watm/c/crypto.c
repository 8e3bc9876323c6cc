#include "crypto.h"
#include "watm.h"

/* ------------------------------------------------------------------ */
/* SHA-256 (FIPS 180-4)                                                */
/* ------------------------------------------------------------------ */

static const uint32_t K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2,
};

static inline uint32_t rotr32(uint32_t x, int n) {
    return (x >> n) | (x << (32 - n));
}

static void sha256_block(sha256_ctx *ctx, const uint8_t *p) {
    uint32_t w[64];
    for (int i = 0; i < 16; i++) {
        w[i] = ((uint32_t)p[i * 4] << 24) | ((uint32_t)p[i * 4 + 1] << 16) |
               ((uint32_t)p[i * 4 + 2] << 8) | (uint32_t)p[i * 4 + 3];
    }
    for (int i = 16; i < 64; i++) {
        uint32_t s0 = rotr32(w[i - 15], 7) ^ rotr32(w[i - 15], 18) ^ (w[i - 15] >> 3);
        uint32_t s1 = rotr32(w[i - 2], 17) ^ rotr32(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    uint32_t a = ctx->state[0], b = ctx->state[1], c = ctx->state[2], d = ctx->state[3];
    uint32_t e = ctx->state[4], f = ctx->state[5], g = ctx->state[6], h = ctx->state[7];
    for (int i = 0; i < 64; i++) {
        uint32_t s1 = rotr32(e, 6) ^ rotr32(e, 11) ^ rotr32(e, 25);
        uint32_t ch = (e & f) ^ (~e & g);
        uint32_t t1 = h + s1 + ch + K[i] + w[i];
        uint32_t s0 = rotr32(a, 2) ^ rotr32(a, 13) ^ rotr32(a, 22);
        uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        uint32_t t2 = s0 + maj;
        h = g;
        g = f;
        f = e;
        e = d + t1;
        d = c;
        c = b;
        b = a;
        a = t1 + t2;
    }
    ctx->state[0] += a;
    ctx->state[1] += b;
    ctx->state[2] += c;
    ctx->state[3] += d;
    ctx->state[4] += e;
    ctx->state[5] += f;
    ctx->state[6] += g;
    ctx->state[7] += h;
}

void sha256_init(sha256_ctx *ctx) {
    ctx->state[0] = 0x6a09e667;
    ctx->state[1] = 0xbb67ae85;
    ctx->state[2] = 0x3c6ef372;
    ctx->state[3] = 0xa54ff53a;
    ctx->state[4] = 0x510e527f;
    ctx->state[5] = 0x9b05688c;
    ctx->state[6] = 0x1f83d9ab;
    ctx->state[7] = 0x5be0cd19;
    ctx->length = 0;
    ctx->buffered = 0;
}

void sha256_update(sha256_ctx *ctx, const uint8_t *data, size_t len) {
    ctx->length += (uint64_t)len * 8;
    while (len > 0) {
        if (ctx->buffered == 0 && len >= 64) {
            sha256_block(ctx, data);
            data += 64;
            len -= 64;
            continue;
        }
        uint32_t take = 64 - ctx->buffered;
        if (take > len) {
            take = (uint32_t)len;
        }
        memcpy(ctx->buffer + ctx->buffered, data, take);
        ctx->buffered += take;
        data += take;
        len -= take;
        if (ctx->buffered == 64) {
            sha256_block(ctx, ctx->buffer);
            ctx->buffered = 0;
        }
    }
}

void sha256_final(sha256_ctx *ctx, uint8_t out[32]) {
    uint64_t bits = ctx->length;
    uint8_t pad = 0x80;
    sha256_update(ctx, &pad, 1);
    ctx->length -= 8; /* padding does not count */
    uint8_t zero = 0;
    while (ctx->buffered != 56) {
        sha256_update(ctx, &zero, 1);
        ctx->length -= 8;
    }
    uint8_t len_be[8];
    for (int i = 0; i < 8; i++) {
        len_be[i] = (uint8_t)(bits >> (56 - 8 * i));
    }
    sha256_update(ctx, len_be, 8);
    for (int i = 0; i < 8; i++) {
        out[i * 4] = (uint8_t)(ctx->state[i] >> 24);
        out[i * 4 + 1] = (uint8_t)(ctx->state[i] >> 16);
        out[i * 4 + 2] = (uint8_t)(ctx->state[i] >> 8);
        out[i * 4 + 3] = (uint8_t)ctx->state[i];
    }
}

/* ------------------------------------------------------------------ */
/* HMAC-SHA256 and HKDF (RFC 2104 / RFC 5869)                          */
/* ------------------------------------------------------------------ */

typedef struct {
    sha256_ctx inner;
    uint8_t opad_key[64];
} hmac_ctx;

static void hmac_init(hmac_ctx *ctx, const uint8_t *key, size_t key_len) {
    uint8_t block[64];
    memset(block, 0, sizeof(block));
    if (key_len > 64) {
        sha256_ctx kd;
        sha256_init(&kd);
        sha256_update(&kd, key, key_len);
        sha256_final(&kd, block);
    } else {
        memcpy(block, key, key_len);
    }
    uint8_t ipad[64];
    for (int i = 0; i < 64; i++) {
        ipad[i] = block[i] ^ 0x36;
        ctx->opad_key[i] = block[i] ^ 0x5c;
    }
    sha256_init(&ctx->inner);
    sha256_update(&ctx->inner, ipad, 64);
}

static void hmac_final(hmac_ctx *ctx, uint8_t out[32]) {
    uint8_t inner_hash[32];
    sha256_final(&ctx->inner, inner_hash);
    sha256_ctx outer;
    sha256_init(&outer);
    sha256_update(&outer, ctx->opad_key, 64);
    sha256_update(&outer, inner_hash, 32);
    sha256_final(&outer, out);
}

void hmac_sha256(const uint8_t *key, size_t key_len, const uint8_t *msg, size_t msg_len,
                 uint8_t out[32]) {
    hmac_ctx ctx;
    hmac_init(&ctx, key, key_len);
    sha256_update(&ctx.inner, msg, msg_len);
    hmac_final(&ctx, out);
}

void hkdf_sha256_32(const uint8_t *salt, size_t salt_len, const uint8_t *ikm, size_t ikm_len,
                    const uint8_t *info, size_t info_len, uint8_t out[32]) {
    /* extract */
    uint8_t prk[32];
    hmac_sha256(salt, salt_len, ikm, ikm_len, prk);
    /* expand, first block only: T(1) = HMAC(prk, info || 0x01) */
    hmac_ctx ctx;
    hmac_init(&ctx, prk, 32);
    sha256_update(&ctx.inner, info, info_len);
    uint8_t counter = 1;
    sha256_update(&ctx.inner, &counter, 1);
    hmac_final(&ctx, out);
}

/* ------------------------------------------------------------------ */
/* ChaCha20 (RFC 8439)                                                 */
/* ------------------------------------------------------------------ */

static inline uint32_t load32_le(const uint8_t *p) {
    return (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) |
           ((uint32_t)p[3] << 24);
}

static inline void store32_le(uint8_t *p, uint32_t v) {
    p[0] = (uint8_t)v;
    p[1] = (uint8_t)(v >> 8);
    p[2] = (uint8_t)(v >> 16);
    p[3] = (uint8_t)(v >> 24);
}

static inline uint32_t rotl32(uint32_t x, int n) {
    return (x << n) | (x >> (32 - n));
}

#define QR(a, b, c, d)                                                                             \
    do {                                                                                           \
        a += b;                                                                                    \
        d ^= a;                                                                                    \
        d = rotl32(d, 16);                                                                         \
        c += d;                                                                                    \
        b ^= c;                                                                                    \
        b = rotl32(b, 12);                                                                         \
        a += b;                                                                                    \
        d ^= a;                                                                                    \
        d = rotl32(d, 8);                                                                          \
        c += d;                                                                                    \
        b ^= c;                                                                                    \
        b = rotl32(b, 7);                                                                          \
    } while (0)

static void chacha20_block(const uint8_t key[32], const uint8_t nonce[12], uint32_t counter,
                           uint8_t out[64]) {
    uint32_t s[16];
    s[0] = 0x61707865;
    s[1] = 0x3320646e;
    s[2] = 0x79622d32;
    s[3] = 0x6b206574;
    for (int i = 0; i < 8; i++) {
        s[4 + i] = load32_le(key + 4 * i);
    }
    s[12] = counter;
    s[13] = load32_le(nonce);
    s[14] = load32_le(nonce + 4);
    s[15] = load32_le(nonce + 8);

    uint32_t x[16];
    for (int i = 0; i < 16; i++) {
        x[i] = s[i];
    }
    for (int round = 0; round < 10; round++) {
        QR(x[0], x[4], x[8], x[12]);
        QR(x[1], x[5], x[9], x[13]);
        QR(x[2], x[6], x[10], x[14]);
        QR(x[3], x[7], x[11], x[15]);
        QR(x[0], x[5], x[10], x[15]);
        QR(x[1], x[6], x[11], x[12]);
        QR(x[2], x[7], x[8], x[13]);
        QR(x[3], x[4], x[9], x[14]);
    }
    for (int i = 0; i < 16; i++) {
        store32_le(out + 4 * i, x[i] + s[i]);
    }
}

static void chacha20_xor(const uint8_t key[32], const uint8_t nonce[12], uint32_t counter,
                         const uint8_t *in, size_t len, uint8_t *out) {
    uint8_t stream[64];
    while (len > 0) {
        chacha20_block(key, nonce, counter++, stream);
        size_t take = len < 64 ? len : 64;
        for (size_t i = 0; i < take; i++) {
            out[i] = in[i] ^ stream[i];
        }
        in += take;
        out += take;
        len -= take;
    }
}

/* ------------------------------------------------------------------ */
/* Poly1305 (donna-style 26-bit limbs)                                 */
/* ------------------------------------------------------------------ */

typedef struct {
    uint32_t r[5];
    uint32_t h[5];
    uint32_t pad[4];
} poly1305_state;

static void poly1305_init(poly1305_state *st, const uint8_t key[32]) {
    st->r[0] = load32_le(key) & 0x3ffffff;
    st->r[1] = (load32_le(key + 3) >> 2) & 0x3ffff03;
    st->r[2] = (load32_le(key + 6) >> 4) & 0x3ffc0ff;
    st->r[3] = (load32_le(key + 9) >> 6) & 0x3f03fff;
    st->r[4] = (load32_le(key + 12) >> 8) & 0x00fffff;
    for (int i = 0; i < 5; i++) {
        st->h[i] = 0;
    }
    for (int i = 0; i < 4; i++) {
        st->pad[i] = load32_le(key + 16 + 4 * i);
    }
}

static void poly1305_blocks(poly1305_state *st, const uint8_t *m, size_t bytes, uint32_t hibit) {
    const uint32_t r0 = st->r[0], r1 = st->r[1], r2 = st->r[2], r3 = st->r[3], r4 = st->r[4];
    const uint32_t s1 = r1 * 5, s2 = r2 * 5, s3 = r3 * 5, s4 = r4 * 5;
    uint32_t h0 = st->h[0], h1 = st->h[1], h2 = st->h[2], h3 = st->h[3], h4 = st->h[4];

    while (bytes >= 16) {
        h0 += load32_le(m) & 0x3ffffff;
        h1 += (load32_le(m + 3) >> 2) & 0x3ffffff;
        h2 += (load32_le(m + 6) >> 4) & 0x3ffffff;
        h3 += (load32_le(m + 9) >> 6) & 0x3ffffff;
        h4 += (load32_le(m + 12) >> 8) | hibit;

        uint64_t d0 = (uint64_t)h0 * r0 + (uint64_t)h1 * s4 + (uint64_t)h2 * s3 +
                      (uint64_t)h3 * s2 + (uint64_t)h4 * s1;
        uint64_t d1 = (uint64_t)h0 * r1 + (uint64_t)h1 * r0 + (uint64_t)h2 * s4 +
                      (uint64_t)h3 * s3 + (uint64_t)h4 * s2;
        uint64_t d2 = (uint64_t)h0 * r2 + (uint64_t)h1 * r1 + (uint64_t)h2 * r0 +
                      (uint64_t)h3 * s4 + (uint64_t)h4 * s3;
        uint64_t d3 = (uint64_t)h0 * r3 + (uint64_t)h1 * r2 + (uint64_t)h2 * r1 +
                      (uint64_t)h3 * r0 + (uint64_t)h4 * s4;
        uint64_t d4 = (uint64_t)h0 * r4 + (uint64_t)h1 * r3 + (uint64_t)h2 * r2 +
                      (uint64_t)h3 * r1 + (uint64_t)h4 * r0;

        uint32_t c = (uint32_t)(d0 >> 26);
        h0 = (uint32_t)d0 & 0x3ffffff;
        d1 += c;
        c = (uint32_t)(d1 >> 26);
        h1 = (uint32_t)d1 & 0x3ffffff;
        d2 += c;
        c = (uint32_t)(d2 >> 26);
        h2 = (uint32_t)d2 & 0x3ffffff;
        d3 += c;
        c = (uint32_t)(d3 >> 26);
        h3 = (uint32_t)d3 & 0x3ffffff;
        d4 += c;
        c = (uint32_t)(d4 >> 26);
        h4 = (uint32_t)d4 & 0x3ffffff;
        h0 += c * 5;
        c = h0 >> 26;
        h0 &= 0x3ffffff;
        h1 += c;

        m += 16;
        bytes -= 16;
    }

    st->h[0] = h0;
    st->h[1] = h1;
    st->h[2] = h2;
    st->h[3] = h3;
    st->h[4] = h4;
}

static void poly1305_finish(poly1305_state *st, uint8_t out[16]) {
    uint32_t h0 = st->h[0], h1 = st->h[1], h2 = st->h[2], h3 = st->h[3], h4 = st->h[4];

    uint32_t c = h1 >> 26;
    h1 &= 0x3ffffff;
    h2 += c;
    c = h2 >> 26;
    h2 &= 0x3ffffff;
    h3 += c;
    c = h3 >> 26;
    h3 &= 0x3ffffff;
    h4 += c;
    c = h4 >> 26;
    h4 &= 0x3ffffff;
    h0 += c * 5;
    c = h0 >> 26;
    h0 &= 0x3ffffff;
    h1 += c;

    uint32_t g0 = h0 + 5;
    c = g0 >> 26;
    g0 &= 0x3ffffff;
    uint32_t g1 = h1 + c;
    c = g1 >> 26;
    g1 &= 0x3ffffff;
    uint32_t g2 = h2 + c;
    c = g2 >> 26;
    g2 &= 0x3ffffff;
    uint32_t g3 = h3 + c;
    c = g3 >> 26;
    g3 &= 0x3ffffff;
    uint32_t g4 = h4 + c - (1u << 26);

    uint32_t mask = (g4 >> 31) - 1;
    g0 &= mask;
    g1 &= mask;
    g2 &= mask;
    g3 &= mask;
    g4 &= mask;
    mask = ~mask;
    h0 = (h0 & mask) | g0;
    h1 = (h1 & mask) | g1;
    h2 = (h2 & mask) | g2;
    h3 = (h3 & mask) | g3;
    h4 = (h4 & mask) | g4;

    h0 = (h0 | (h1 << 26)) & 0xffffffff;
    h1 = ((h1 >> 6) | (h2 << 20)) & 0xffffffff;
    h2 = ((h2 >> 12) | (h3 << 14)) & 0xffffffff;
    h3 = ((h3 >> 18) | (h4 << 8)) & 0xffffffff;

    uint64_t f = (uint64_t)h0 + st->pad[0];
    h0 = (uint32_t)f;
    f = (uint64_t)h1 + st->pad[1] + (f >> 32);
    h1 = (uint32_t)f;
    f = (uint64_t)h2 + st->pad[2] + (f >> 32);
    h2 = (uint32_t)f;
    f = (uint64_t)h3 + st->pad[3] + (f >> 32);
    h3 = (uint32_t)f;

    store32_le(out, h0);
    store32_le(out + 4, h1);
    store32_le(out + 8, h2);
    store32_le(out + 12, h3);
}

/* ------------------------------------------------------------------ */
/* AEAD construction (RFC 8439 section 2.8, empty AAD)                 */
/* ------------------------------------------------------------------ */

static void aead_tag(const uint8_t otk[32], const uint8_t *ct, size_t ct_len, uint8_t tag[16]) {
    poly1305_state st;
    poly1305_init(&st, otk);
    /* aad is empty: nothing to absorb, no padding needed */
    size_t full = ct_len & ~(size_t)15;
    if (full) {
        poly1305_blocks(&st, ct, full, 1u << 24);
    }
    if (ct_len > full) {
        uint8_t block[16];
        memset(block, 0, 16);
        memcpy(block, ct + full, ct_len - full);
        poly1305_blocks(&st, block, 16, 1u << 24);
    }
    uint8_t lengths[16];
    memset(lengths, 0, 16);
    for (int i = 0; i < 8; i++) {
        lengths[8 + i] = (uint8_t)((uint64_t)ct_len >> (8 * i));
    }
    poly1305_blocks(&st, lengths, 16, 1u << 24);
    poly1305_finish(&st, tag);
}

void chacha20poly1305_seal(const uint8_t key[32], const uint8_t nonce[12], const uint8_t *plain,
                           size_t len, uint8_t *out) {
    uint8_t block0[64];
    chacha20_block(key, nonce, 0, block0);
    chacha20_xor(key, nonce, 1, plain, len, out);
    aead_tag(block0, out, len, out + len);
}

int chacha20poly1305_open(const uint8_t key[32], const uint8_t nonce[12], const uint8_t *in,
                          size_t in_len, uint8_t *out) {
    if (in_len < 16) {
        return -1;
    }
    size_t ct_len = in_len - 16;
    uint8_t block0[64];
    chacha20_block(key, nonce, 0, block0);
    uint8_t tag[16];
    aead_tag(block0, in, ct_len, tag);
    uint8_t diff = 0;
    for (int i = 0; i < 16; i++) {
        diff |= tag[i] ^ in[ct_len + i];
    }
    if (diff != 0) {
        return -1;
    }
    chacha20_xor(key, nonce, 1, in, ct_len, out);
    return 0;
}
