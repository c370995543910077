Sure! Here is how you could approach the problem. First sort the list, then
compare adjacent elements and return true as soon as two of them are closer
than the threshold. Let me know if you would like the code.
