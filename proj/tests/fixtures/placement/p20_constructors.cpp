#include <string>
#include <utility>

class Name {
public:
    explicit Name(std::string s)
        : text_(std::move(s)),
          length_(text_.size())
    {
        normalize();
    }

    ~Name() = default;

private:
    void normalize() {}

    std::string text_;
    std::size_t length_;
};
