print(1)
print("hello, world")
