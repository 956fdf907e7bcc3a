// SPDX-License-Identifier: Apache-2.0
#include "capguard/elf_symbols.hpp"

#include <elf.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "capguard/errors.hpp"

namespace capguard {

namespace {

template <typename T>
const T* view_at(std::string_view bytes, size_t offset, size_t count = 1) {
    if (offset + sizeof(T) * count > bytes.size() || offset + sizeof(T) * count < offset) {
        throw ElfError("truncated ELF file");
    }
    return reinterpret_cast<const T*>(bytes.data() + offset);
}

}  // namespace

SymbolTable SymbolTable::load(std::string_view bytes, std::string binary_path) {
    if (bytes.size() < sizeof(Elf64_Ehdr) ||
        std::memcmp(bytes.data(), ELFMAG, SELFMAG) != 0) {
        throw ElfError("not an ELF file");
    }
    const auto* ehdr = view_at<Elf64_Ehdr>(bytes, 0);
    if (ehdr->e_ident[EI_CLASS] != ELFCLASS64 ||
        ehdr->e_ident[EI_DATA] != ELFDATA2LSB) {
        throw ElfError("only ELF64 little-endian binaries are supported");
    }
    if (ehdr->e_shoff == 0 || ehdr->e_shnum == 0) {
        throw SymbolsUnavailableError("symbols unavailable: no section headers");
    }

    const auto* shdrs = view_at<Elf64_Shdr>(bytes, ehdr->e_shoff, ehdr->e_shnum);

    const Elf64_Shdr* symtab = nullptr;
    for (int i = 0; i < ehdr->e_shnum; ++i) {
        if (shdrs[i].sh_type == SHT_SYMTAB) {
            symtab = &shdrs[i];
            break;
        }
    }
    // Fall back to .dynsym when .symtab was stripped but dynamic symbols remain.
    if (!symtab) {
        for (int i = 0; i < ehdr->e_shnum; ++i) {
            if (shdrs[i].sh_type == SHT_DYNSYM) {
                symtab = &shdrs[i];
                break;
            }
        }
    }
    if (!symtab || symtab->sh_size == 0) {
        throw SymbolsUnavailableError("symbols unavailable: binary is stripped");
    }
    if (symtab->sh_link >= ehdr->e_shnum) throw ElfError("bad symtab string link");
    const Elf64_Shdr& strtab = shdrs[symtab->sh_link];

    const size_t nsyms = symtab->sh_size / sizeof(Elf64_Sym);
    const auto* syms = view_at<Elf64_Sym>(bytes, symtab->sh_offset, nsyms);
    const char* strings = view_at<char>(bytes, strtab.sh_offset, strtab.sh_size);

    SymbolTable table;
    table.binary_path_ = std::move(binary_path);
    for (size_t i = 0; i < nsyms; ++i) {
        const Elf64_Sym& sym = syms[i];
        if (ELF64_ST_TYPE(sym.st_info) != STT_FUNC) continue;
        if (sym.st_value == 0) continue;
        if (sym.st_name >= strtab.sh_size) continue;
        std::string name(strings + sym.st_name);
        if (name.empty()) continue;
        table.entries_.push_back(Entry{sym.st_value, sym.st_size, std::move(name)});
    }
    if (table.entries_.empty()) {
        throw SymbolsUnavailableError("symbols unavailable: no function symbols");
    }

    // Sort by start; among symbols sharing a start address keep the one
    // with the larger size.
    std::sort(table.entries_.begin(), table.entries_.end(),
              [](const Entry& a, const Entry& b) {
                  return a.start != b.start ? a.start < b.start : a.size > b.size;
              });
    table.entries_.erase(
        std::unique(table.entries_.begin(), table.entries_.end(),
                    [](const Entry& a, const Entry& b) { return a.start == b.start; }),
        table.entries_.end());
    return table;
}

SymbolTable SymbolTable::load_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ElfError("cannot open binary: " + path);
    std::ostringstream contents;
    contents << file.rdbuf();
    return load(contents.str(), path);
}

const SymbolTable::Entry& SymbolTable::resolve(uint64_t addr) const {
    // Last entry with start <= addr.
    auto it = std::upper_bound(entries_.begin(), entries_.end(), addr,
                               [](uint64_t a, const Entry& e) { return a < e.start; });
    if (it == entries_.begin()) throw UnresolvableAddressError(addr);
    --it;

    const uint64_t end = it->start + it->size;
    if (addr < end) return *it;

    // Padding gap: attribute to the preceding symbol only when short and
    // not past the next symbol's start.
    auto next = std::next(it);
    const uint64_t slack_end = end + kSymbolGapSlack;
    if (addr < slack_end && (next == entries_.end() || addr < next->start)) {
        return *it;
    }
    throw UnresolvableAddressError(addr);
}

}  // namespace capguard
